// swapnet: convolution benchmarks, cross-algorithm verification and
// end-to-end model runs.
//
//   swapnet bench-conv --shape 10,3,224,224 --kernel 3 --out-channels 16 --algos direct,im2col,smm
//   swapnet verify --precision f32
//   swapnet run --model models/convnet.json --conv2d-algo direct,smm
//
// Exit codes: 0 success, 1 verification failure, 2 usage or load error.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "swapnet/bench.hpp"
#include "swapnet/zoo.hpp"

namespace {

using namespace swapnet;

constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size() || v < 0) throw std::invalid_argument(text);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw UsageError("invalid " + what + " '" + text + "'");
  }
}

Shape parse_shape(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 4) throw UsageError("--shape must be N,C,H,W, got '" + text + "'");
  Shape s;
  for (const auto& p : parts) {
    const std::size_t v = parse_count(p, "shape extent");
    if (v == 0) throw UsageError("--shape extents must be >= 1");
    s.push_back(v);
  }
  return s;
}

// "3" -> 3x3; "3,5" or "3x5" -> 3x5.
Extent2 parse_extent(const std::string& text, const std::string& what) {
  std::string normalized = text;
  for (char& c : normalized) {
    if (c == 'x') c = ',';
  }
  const auto parts = split(normalized, ',');
  if (parts.size() == 1) {
    const std::size_t v = parse_count(parts[0], what);
    return {v, v};
  }
  if (parts.size() == 2) return {parse_count(parts[0], what), parse_count(parts[1], what)};
  throw UsageError("invalid " + what + " '" + text + "'");
}

InputShape parse_input_shape(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 4) throw UsageError("--input must be N|*,C,H,W");
  InputShape s;
  if (parts[0] != "*") s.batch = parse_count(parts[0], "batch");
  s.channels = parse_count(parts[1], "channels");
  s.height = parse_count(parts[2], "height");
  s.width = parse_count(parts[3], "width");
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes to --csv PATH when given, stdout otherwise.
class CsvSink {
 public:
  explicit CsvSink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw UsageError("cannot write " + path);
    }
  }
  std::ostream& out() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

struct BenchConvArgs {
  std::string shape;
  std::string kernel = "3";
  std::size_t out_channels = 16;
  std::string stride = "1";
  std::string padding = "0";
  std::string dilation = "1";
  std::string algos = "direct,im2col,kn2row,smm,winograd";
  std::size_t repeat = 50;
  std::size_t warmup = 5;
  std::string precision = "f32";
  std::string csv;
  std::uint64_t seed = 0;
  bool no_bias = false;
  bool overhead = false;
};

int cmd_bench_conv(const BenchConvArgs& a) {
  ConvCase problem;
  problem.input_shape = parse_shape(a.shape);
  problem.params.in_channels = problem.input_shape[1];
  problem.params.out_channels = a.out_channels;
  problem.params.kernel = parse_extent(a.kernel, "kernel");
  problem.params.stride = parse_extent(a.stride, "stride");
  problem.params.padding = parse_extent(a.padding, "padding");
  problem.params.dilation = parse_extent(a.dilation, "dilation");
  problem.bias = !a.no_bias;
  if (a.repeat == 0) throw UsageError("--repeat must be >= 1");
  try {
    conv2d_output_shape(problem.params, problem.input_shape);
  } catch (const ShapeError& e) {
    throw UsageError(e.what());
  }
  const auto algos = split(a.algos, ',');
  if (algos.empty()) throw UsageError("--algos must name at least one algorithm");
  const Precision precision = parse_precision(a.precision);

  CsvSink sink(a.csv);
  sink.out() << bench_csv_header() << '\n';
  for (const auto& r : bench_conv(problem, algos, a.repeat, a.warmup, precision, a.seed)) {
    sink.out() << to_csv_row(r) << '\n';
  }
  if (a.overhead) {
    const auto o = measure_dispatch_overhead(problem, ConvAlgo::direct, a.repeat, a.warmup, precision, a.seed);
    std::fprintf(stderr, "dispatch overhead (direct): kernel %.6g s, model %.6g s, overhead %.3g s (%.3f%%)\n",
                 o.kernel_mean_s, o.model_mean_s, o.overhead_s, 100.0 * o.relative);
  }
  return 0;
}

struct VerifyArgs {
  std::size_t configs = 200;
  std::uint64_t seed = 0;
  std::string precision = "f64";
  std::string algos = "im2col,kn2row,smm,winograd";
  std::string csv;
  std::string fault_inject;
};

int cmd_verify(const VerifyArgs& a) {
  VerifyOptions options;
  options.configs = a.configs;
  options.seed = a.seed;
  options.precision = parse_precision(a.precision);
  options.algorithms = split(a.algos, ',');
  if (!a.fault_inject.empty()) {
    const std::string prefix = "drop-bias:";
    if (a.fault_inject.rfind(prefix, 0) != 0) throw UsageError("--fault-inject must be drop-bias:<algorithm>");
    options.drop_bias = a.fault_inject.substr(prefix.size());
  }
  const VerifyReport report = verify_sweep(options);
  CsvSink sink(a.csv);
  sink.out() << verify_csv_header() << '\n';
  for (const auto& row : report.rows) sink.out() << to_csv_row(row) << '\n';
  std::fprintf(stderr, "verify: %zu configs, %zu checks, %zu failures (%s) -> %s\n", a.configs, report.checked,
               report.failures, a.precision.c_str(), report.passed() ? "PASS" : "FAIL");
  return report.passed() ? 0 : kExitVerifyFailed;
}

struct RunArgs {
  std::string model;
  std::vector<std::string> conv2d_algos;
  std::vector<std::string> rule_files;
  std::size_t repeat = 10;
  std::size_t warmup = 1;
  std::string precision = "f32";
  std::uint64_t seed = 0;
  std::size_t batch = 1;
  std::string csv;
};

int cmd_run(const RunArgs& a) {
  ModelDescriptor desc;
  try {
    desc = load_model_file(a.model);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  std::vector<std::string> selectors = a.conv2d_algos;
  for (const auto& path : a.rule_files) {
    // Rule files use the same clause syntax, one clause per line.
    std::string text = read_file(path);
    for (char& c : text) {
      if (c == '\n') c = ';';
    }
    selectors.push_back(text);
  }
  if (a.repeat == 0) throw UsageError("--repeat must be >= 1");
  const auto records = run_model(desc, selectors, a.repeat, a.warmup, parse_precision(a.precision), a.seed, a.batch);
  CsvSink sink(a.csv);
  sink.out() << run_csv_header() << '\n';
  bool all_equivalent = true;
  for (const auto& r : records) {
    sink.out() << to_csv_row(desc.name, r) << '\n';
    all_equivalent = all_equivalent && r.equivalent;
  }
  return all_equivalent ? 0 : kExitVerifyFailed;
}

struct MakeModelArgs {
  std::string arch;
  std::string input = "*,3,32,32";
  std::uint64_t seed = 0;
  std::size_t width_div = 1;
  std::size_t classes = 10;
  std::string out;
};

int cmd_make_model(const MakeModelArgs& a) {
  const InputShape input = parse_input_shape(a.input);
  ModelDescriptor desc;
  if (a.arch == "convnet") {
    desc = convnet_descriptor(input, a.seed);
  } else if (a.arch == "vgg16") {
    if (a.width_div == 0) throw UsageError("--width-div must be >= 1");
    desc = vgg16_descriptor(input, a.seed, a.width_div, a.classes);
  } else {
    throw UsageError("unknown architecture '" + a.arch + "' (expected convnet or vgg16)");
  }
  try {
    propagate_shapes(desc);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const std::string text = dump_model(desc);
  if (a.out.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream f(a.out);
    if (!f) throw UsageError("cannot write " + a.out);
    f << text << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-layer convolution algorithm selection: benchmarks, verification and model runs"};
  app.require_subcommand(1);

  BenchConvArgs bench;
  auto* bench_cmd = app.add_subcommand("bench-conv", "Time conv algorithms on one problem, CSV out");
  bench_cmd->add_option("--shape", bench.shape, "Input N,C,H,W")->required();
  bench_cmd->add_option("--kernel", bench.kernel, "Kernel k or kh,kw");
  bench_cmd->add_option("--out-channels", bench.out_channels, "Output channels");
  bench_cmd->add_option("--stride", bench.stride, "Stride s or sh,sw");
  bench_cmd->add_option("--padding", bench.padding, "Padding p or ph,pw");
  bench_cmd->add_option("--dilation", bench.dilation, "Dilation d or dh,dw");
  bench_cmd->add_option("--algos", bench.algos, "Comma-separated algorithm names");
  bench_cmd->add_option("--repeat", bench.repeat, "Timed repetitions");
  bench_cmd->add_option("--warmup", bench.warmup, "Untimed warmup runs");
  bench_cmd->add_option("--precision", bench.precision, "f32 or f64");
  bench_cmd->add_option("--csv", bench.csv, "Output path (default stdout)");
  bench_cmd->add_option("--seed", bench.seed, "RNG seed");
  bench_cmd->add_flag("--no-bias", bench.no_bias, "Benchmark without bias");
  bench_cmd->add_flag("--overhead", bench.overhead, "Also report model dispatch overhead on stderr");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Check every algorithm against direct conv on random configs");
  verify_cmd->add_option("--configs", verify.configs, "Number of random configurations");
  verify_cmd->add_option("--seed", verify.seed, "RNG seed");
  verify_cmd->add_option("--precision", verify.precision, "f32 or f64");
  verify_cmd->add_option("--algos", verify.algos, "Comma-separated algorithms to check");
  verify_cmd->add_option("--csv", verify.csv, "Output path (default stdout)");
  verify_cmd->add_option("--fault-inject", verify.fault_inject, "Testing only: drop-bias:<algorithm>");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "End-to-end model latency per conv2d selector");
  run_cmd->add_option("--model", run.model, "Model JSON file")->required();
  run_cmd->add_option("--conv2d-algo", run.conv2d_algos,
                      "Selector: name, comma list, or rule like 'in_channels>200:smm;*:direct' (repeatable)");
  run_cmd->add_option("--rule-file", run.rule_files, "File with one rule clause per line (repeatable)");
  run_cmd->add_option("--repeat", run.repeat, "Timed repetitions");
  run_cmd->add_option("--warmup", run.warmup, "Untimed warmup runs");
  run_cmd->add_option("--precision", run.precision, "f32 or f64");
  run_cmd->add_option("--seed", run.seed, "RNG seed for the input");
  run_cmd->add_option("--batch", run.batch, "Batch size when the model's batch is '*'");
  run_cmd->add_option("--csv", run.csv, "Output path (default stdout)");

  MakeModelArgs make;
  auto* make_cmd = app.add_subcommand("make-model", "Write a random-weight model file (convnet or vgg16)");
  make_cmd->add_option("arch", make.arch, "convnet or vgg16")->required();
  make_cmd->add_option("--input", make.input, "Input shape N|*,C,H,W");
  make_cmd->add_option("--seed", make.seed, "Weight RNG seed");
  make_cmd->add_option("--width-div", make.width_div, "Divide vgg16 channel counts");
  make_cmd->add_option("--classes", make.classes, "vgg16 classifier outputs");
  make_cmd->add_option("--out", make.out, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*bench_cmd) return cmd_bench_conv(bench);
    if (*verify_cmd) return cmd_verify(verify);
    if (*run_cmd) return cmd_run(run);
    if (*make_cmd) return cmd_make_model(make);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
