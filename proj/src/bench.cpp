#include "swapnet/bench.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "swapnet/zoo.hpp"

namespace swapnet {

namespace {

std::string pair_text(Extent2 e) { return std::to_string(e.h) + "x" + std::to_string(e.w); }

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

template <typename T>
double checksum(const Tensor<T>& t) {
  double sum = 0.0;
  for (T v : t.data()) sum += static_cast<double>(v);
  return sum;
}

ModelDescriptor single_conv_model(const ConvCase& problem, const Conv2dSpec<double>& spec) {
  ModelDescriptor d;
  d.name = "conv2d";
  d.input_shape = InputShape{problem.input_shape[0], problem.input_shape[1], problem.input_shape[2],
                             problem.input_shape[3]};
  d.layers.push_back(make_conv2d(spec));
  return d;
}

template <typename T>
std::vector<BenchRecord> bench_conv_impl(const ConvCase& problem, const std::vector<std::string>& algorithms,
                                         std::size_t repeat, std::size_t warmup, std::uint64_t seed,
                                         const AlgorithmRegistry& registry) {
  std::mt19937_64 rng(seed);
  const Conv2dSpec<double> spec64 = random_conv2d_spec(problem.params, problem.bias, rng);
  const Tensor<T> input = random_tensor<T>(problem.input_shape, rng);
  const Conv2dSpec<T> spec = spec64.template cast<T>();
  const Tensor<T> reference = conv2d_direct(input, spec);
  const ModelDescriptor desc = single_conv_model(problem, spec64);

  std::vector<BenchRecord> records;
  for (const std::string& name : algorithms) {
    BenchRecord r;
    r.op = "conv2d";
    r.algorithm = name;
    r.input_shape = problem.input_shape;
    r.params = problem.params;
    r.repeat = repeat;
    std::optional<Model<T>> model;
    try {
      model.emplace(swap_backend<T>(desc, {{OpType::conv2d, AlgorithmSelector::fixed(name)}}, registry));
    } catch (const UnsupportedConfiguration&) {
      r.status = "unsupported";
      records.push_back(std::move(r));
      continue;
    }
    const BoundLayer<T>& layer = model->layers().front();
    std::optional<Tensor<T>> out;
    try {
      const auto samples = time_repeated([&] { out = layer.impl(input, layer.layer); }, repeat, warmup);
      r.timing = summarize(samples);
    } catch (const Error&) {
      r.status = "error";
      records.push_back(std::move(r));
      continue;
    }
    r.max_abs_err = max_abs_diff(*out, reference);
    r.status = r.max_abs_err <= conv_tolerance(layer.layer.algorithm, precision_of<T>()) ? "ok" : "mismatch";
    records.push_back(std::move(r));
  }
  return records;
}

template <typename T>
OverheadResult overhead_impl(const ConvCase& problem, ConvAlgo algo, std::size_t repeat, std::size_t warmup,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Conv2dSpec<double> spec64 = random_conv2d_spec(problem.params, problem.bias, rng);
  const Tensor<T> input = random_tensor<T>(problem.input_shape, rng);
  const Conv2dSpec<T> spec = spec64.template cast<T>();
  const Model<T> model = swap_backend<T>(single_conv_model(problem, spec64),
                                         {{OpType::conv2d, AlgorithmSelector::fixed(std::string(to_string(algo)))}});

  using Clock = std::chrono::steady_clock;
  auto time_once = [](auto&& fn) {
    const auto t0 = Clock::now();
    fn();
    return std::chrono::duration<double>(Clock::now() - t0).count();
  };
  auto run_kernel = [&] { return conv2d(input, spec, algo); };
  auto run_model = [&] { return model.forward(input); };
  for (std::size_t i = 0; i < warmup; ++i) {
    run_kernel();
    run_model();
  }
  double kernel_total = 0.0, model_total = 0.0;
  for (std::size_t i = 0; i < repeat; ++i) {
    if (i % 2 == 0) {
      kernel_total += time_once(run_kernel);
      model_total += time_once(run_model);
    } else {
      model_total += time_once(run_model);
      kernel_total += time_once(run_kernel);
    }
  }
  OverheadResult r;
  r.kernel_mean_s = kernel_total / static_cast<double>(repeat);
  r.model_mean_s = model_total / static_cast<double>(repeat);
  r.overhead_s = r.model_mean_s - r.kernel_mean_s;
  r.relative = r.overhead_s / r.kernel_mean_s;
  return r;
}

template <typename T>
VerifyReport verify_impl(const VerifyOptions& options, const AlgorithmRegistry& registry) {
  std::mt19937_64 rng(options.seed);
  VerifyReport report;
  for (std::size_t config = 0; config < options.configs; ++config) {
    const ConvCase problem = random_conv_case(rng);
    const Conv2dSpec<double> spec64 = random_conv2d_spec(problem.params, problem.bias, rng);
    const Tensor<T> input = random_tensor<T>(problem.input_shape, rng);
    const Conv2dSpec<T> spec = spec64.template cast<T>();
    const Tensor<T> reference = conv2d_direct(input, spec);
    ModelDescriptor desc = single_conv_model(problem, spec64);

    for (const std::string& name : options.algorithms) {
      VerifyRow row;
      row.config = config;
      row.problem = problem;
      row.algorithm = name;
      const bool mutate = options.drop_bias && *options.drop_bias == name;
      ModelDescriptor run_desc = desc;
      if (mutate) std::get<Conv2dSpec<double>>(run_desc.layers.front().spec).bias.reset();
      try {
        const Model<T> model = swap_backend<T>(run_desc, {{OpType::conv2d, AlgorithmSelector::fixed(name)}}, registry);
        row.tolerance = conv_tolerance(model.layers().front().layer.algorithm, precision_of<T>());
        row.max_abs_err = max_abs_diff(model.forward(input), reference);
        row.status = row.max_abs_err <= row.tolerance ? "pass" : "fail";
      } catch (const UnsupportedConfiguration&) {
        row.tolerance = conv_tolerance(name, precision_of<T>());
        row.status = "unsupported";
      }
      if (row.status != "unsupported") ++report.checked;
      if (row.status == "fail") ++report.failures;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

template <typename T>
std::vector<RunRecord> run_impl(const ModelDescriptor& desc, const std::vector<std::string>& selectors,
                                std::size_t repeat, std::size_t warmup, std::uint64_t seed, std::size_t batch,
                                const AlgorithmRegistry& registry) {
  std::mt19937_64 rng(seed);
  const Tensor<T> input = random_tensor<T>(desc.input_shape.with_batch(batch), rng);
  const double atol = precision_of<T>() == Precision::f64 ? 1e-6 : 1e-4;

  auto measure = [&](const std::string& label, const Model<T>& model) {
    RunRecord r;
    r.selector = label;
    r.assignments = model.assignments();
    r.repeat = repeat;
    std::optional<Tensor<T>> out;
    r.timing = summarize(time_repeated([&] { out = model.forward(input); }, repeat, warmup));
    r.checksum = checksum(*out);
    return std::make_pair(std::move(r), std::move(*out));
  };

  auto [baseline, reference] = measure("default", swap_backend<T>(desc, {}, registry));
  auto [direct, direct_out] =
      measure("direct", swap_backend<T>(desc, {{OpType::conv2d, AlgorithmSelector::fixed("direct")}}, registry));
  const double direct_mean = direct.timing.mean_s;

  auto finish = [&](RunRecord& r, const Tensor<T>& out) {
    r.max_abs_err = max_abs_diff(out, reference);
    r.equivalent = r.max_abs_err <= atol;
    r.rel_direct = r.timing.mean_s / direct_mean;
  };

  std::vector<RunRecord> records;
  finish(baseline, reference);
  records.push_back(std::move(baseline));
  for (const std::string& text : selectors) {
    if (text == "direct") {
      finish(direct, direct_out);
      records.push_back(direct);
      continue;
    }
    const Model<T> model = swap_backend<T>(desc, {{OpType::conv2d, parse_selector(text)}}, registry);
    auto [r, out] = measure(text, model);
    finish(r, out);
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace

TimingStats summarize(const std::vector<double>& samples) {
  TimingStats s;
  if (samples.empty()) return s;
  const double n = static_cast<double>(samples.size());
  s.mean_s = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  s.min_s = *std::min_element(samples.begin(), samples.end());
  double var = 0.0;
  for (double x : samples) var += (x - s.mean_s) * (x - s.mean_s);
  s.stddev_s = std::sqrt(var / n);
  return s;
}

const std::string& bench_csv_header() {
  static const std::string header =
      "op,algorithm,n,c,h,w,kernel,stride,padding,dilation,repeat,mean_s,min_s,stddev_s,max_abs_err,status";
  return header;
}

std::string to_csv_row(const BenchRecord& r) {
  std::ostringstream os;
  os << r.op << ',' << r.algorithm;
  for (std::size_t i = 0; i < 4; ++i) os << ',' << (i < r.input_shape.size() ? r.input_shape[i] : 0);
  os << ',' << pair_text(r.params.kernel) << ',' << pair_text(r.params.stride) << ','
     << pair_text(r.params.padding) << ',' << pair_text(r.params.dilation) << ',' << r.repeat;
  if (r.status == "unsupported" || r.status == "error") {
    os << ",,,,,";
  } else {
    os << ',' << number(r.timing.mean_s) << ',' << number(r.timing.min_s) << ',' << number(r.timing.stddev_s) << ','
       << number(r.max_abs_err) << ',';
  }
  os << r.status;
  return os.str();
}

double conv_tolerance(std::string_view algorithm, Precision precision) {
  const bool winograd = algorithm == "winograd";
  if (precision == Precision::f64) return winograd ? 1e-4 : 1e-6;
  return winograd ? 1e-3 : 1e-4;
}

std::vector<BenchRecord> bench_conv(const ConvCase& problem, const std::vector<std::string>& algorithms,
                                    std::size_t repeat, std::size_t warmup, Precision precision, std::uint64_t seed,
                                    const AlgorithmRegistry& registry) {
  if (repeat == 0) throw Error("repeat must be >= 1");
  conv2d_output_shape(problem.params, problem.input_shape);
  if (precision == Precision::f32) return bench_conv_impl<float>(problem, algorithms, repeat, warmup, seed, registry);
  return bench_conv_impl<double>(problem, algorithms, repeat, warmup, seed, registry);
}

OverheadResult measure_dispatch_overhead(const ConvCase& problem, ConvAlgo algo, std::size_t repeat,
                                         std::size_t warmup, Precision precision, std::uint64_t seed) {
  if (repeat == 0) throw Error("repeat must be >= 1");
  if (precision == Precision::f32) return overhead_impl<float>(problem, algo, repeat, warmup, seed);
  return overhead_impl<double>(problem, algo, repeat, warmup, seed);
}

ConvCase random_conv_case(std::mt19937_64& rng) {
  auto draw = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  for (;;) {
    ConvCase c;
    const bool winograd_family = draw(0, 1) == 0;
    ConvParams& p = c.params;
    p.in_channels = draw(1, 8);
    p.out_channels = draw(1, 8);
    if (winograd_family) {
      p.kernel = {3, 3};
      p.stride = {1, 1};
      p.dilation = {1, 1};
    } else {
      p.kernel = {draw(1, 5), draw(1, 5)};
      p.stride = {draw(1, 3), draw(1, 3)};
      p.dilation = {draw(1, 2), draw(1, 2)};
    }
    p.padding = {draw(0, 2), draw(0, 2)};
    c.input_shape = {draw(1, 4), p.in_channels, draw(4, 16), draw(4, 16)};
    c.bias = true;
    try {
      conv2d_output_shape(p, c.input_shape);
      return c;
    } catch (const ShapeError&) {
      // effective kernel larger than the padded input; draw again
    }
  }
}

VerifyReport verify_sweep(const VerifyOptions& options, const AlgorithmRegistry& registry) {
  if (options.precision == Precision::f32) return verify_impl<float>(options, registry);
  return verify_impl<double>(options, registry);
}

const std::string& verify_csv_header() {
  static const std::string header = "config,algorithm,n,c,h,w,out_channels,kernel,stride,padding,dilation,max_abs_err,"
                                    "tolerance,status";
  return header;
}

std::string to_csv_row(const VerifyRow& r) {
  std::ostringstream os;
  const Shape& s = r.problem.input_shape;
  const ConvParams& p = r.problem.params;
  os << r.config << ',' << r.algorithm << ',' << s[0] << ',' << s[1] << ',' << s[2] << ',' << s[3] << ','
     << p.out_channels << ',' << pair_text(p.kernel) << ',' << pair_text(p.stride) << ',' << pair_text(p.padding)
     << ',' << pair_text(p.dilation) << ',';
  if (r.status == "unsupported") {
    os << ",";
  } else {
    os << number(r.max_abs_err) << ',';
  }
  os << number(r.tolerance) << ',' << r.status;
  return os.str();
}

std::vector<RunRecord> run_model(const ModelDescriptor& desc, const std::vector<std::string>& selectors,
                                 std::size_t repeat, std::size_t warmup, Precision precision, std::uint64_t seed,
                                 std::size_t batch, const AlgorithmRegistry& registry) {
  if (repeat == 0) throw Error("repeat must be >= 1");
  if (precision == Precision::f32) return run_impl<float>(desc, selectors, repeat, warmup, seed, batch, registry);
  return run_impl<double>(desc, selectors, repeat, warmup, seed, batch, registry);
}

const std::string& run_csv_header() {
  static const std::string header =
      "model,selector,assignments,repeat,mean_s,min_s,stddev_s,rel_direct,max_abs_err,equivalent,checksum";
  return header;
}

std::string to_csv_row(const std::string& model, const RunRecord& r) {
  std::ostringstream os;
  std::string assignments;
  for (std::size_t i = 0; i < r.assignments.size(); ++i) {
    if (i) assignments += '|';
    assignments += r.assignments[i];
  }
  // Selectors may contain ';' and ',' so they are always quoted.
  os << model << ",\"" << r.selector << "\"," << assignments << ',' << r.repeat << ',' << number(r.timing.mean_s)
     << ',' << number(r.timing.min_s) << ',' << number(r.timing.stddev_s) << ',' << number(r.rel_direct) << ','
     << number(r.max_abs_err) << ',' << (r.equivalent ? "PASS" : "FAIL");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", r.checksum);
  os << ',' << buf;
  return os.str();
}

}  // namespace swapnet
