#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "swapnet/model.hpp"
#include "swapnet/selection.hpp"

namespace swapnet {

// One convolution problem: input shape plus geometry.
struct ConvCase {
  Shape input_shape;
  ConvParams params;
  bool bias = true;
};

struct TimingStats {
  double mean_s = 0.0;
  double min_s = 0.0;
  double stddev_s = 0.0;
};

// Population standard deviation, so a single sample gives 0.
TimingStats summarize(const std::vector<double>& samples);

// Runs fn() `warmup` times untimed, then `repeat` timed samples (seconds).
template <typename F>
std::vector<double> time_repeated(F&& fn, std::size_t repeat, std::size_t warmup) {
  using Clock = std::chrono::steady_clock;
  for (std::size_t i = 0; i < warmup; ++i) fn();
  std::vector<double> samples;
  samples.reserve(repeat);
  for (std::size_t i = 0; i < repeat; ++i) {
    const auto t0 = Clock::now();
    fn();
    samples.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return samples;
}

struct BenchRecord {
  std::string op;
  std::string algorithm;
  Shape input_shape;
  ConvParams params;
  std::size_t repeat = 0;
  TimingStats timing;
  double max_abs_err = 0.0;
  std::string status;  // ok | mismatch | unsupported | error
};

// op,algorithm,n,c,h,w,kernel,stride,padding,dilation,repeat,mean_s,min_s,stddev_s,max_abs_err,status
const std::string& bench_csv_header();
std::string to_csv_row(const BenchRecord& record);

// Cross-algorithm tolerance against the direct oracle.
double conv_tolerance(std::string_view algorithm, Precision precision);

/// Times each named conv algorithm on one random problem. Names may be
/// built-ins, "auto", or registered conv2d algorithms. Configurations an
/// algorithm cannot run produce a record with status "unsupported".
std::vector<BenchRecord> bench_conv(const ConvCase& problem, const std::vector<std::string>& algorithms,
                                    std::size_t repeat, std::size_t warmup, Precision precision, std::uint64_t seed,
                                    const AlgorithmRegistry& registry = AlgorithmRegistry::global());

struct OverheadResult {
  double kernel_mean_s = 0.0;
  double model_mean_s = 0.0;
  double overhead_s = 0.0;  // model - kernel
  double relative = 0.0;    // overhead / kernel
};

/// Latency of forward() through a one-layer Model against calling the same
/// kernel directly on the same data. Samples alternate between the two so
/// drift affects both equally.
OverheadResult measure_dispatch_overhead(const ConvCase& problem, ConvAlgo algo, std::size_t repeat,
                                         std::size_t warmup, Precision precision, std::uint64_t seed);

/// Random problem drawn from kernel 1-5, stride 1-3, padding 0-2,
/// dilation 1-2, channels 1-8, spatial 4-16, batch 1-4 (per axis). About half
/// the draws are forced into the 3x3 / stride 1 / dilation 1 family so
/// winograd gets exercised. Always valid; always carries a bias.
ConvCase random_conv_case(std::mt19937_64& rng);

struct VerifyOptions {
  std::size_t configs = 200;
  std::uint64_t seed = 0;
  Precision precision = Precision::f64;
  std::vector<std::string> algorithms = {"im2col", "kn2row", "smm", "winograd"};
  // Test hook: run this algorithm with its bias add dropped.
  std::optional<std::string> drop_bias;
};

struct VerifyRow {
  std::size_t config = 0;
  ConvCase problem;
  std::string algorithm;
  double max_abs_err = 0.0;
  double tolerance = 0.0;
  std::string status;  // pass | fail | unsupported
};

struct VerifyReport {
  std::vector<VerifyRow> rows;
  std::size_t checked = 0;
  std::size_t failures = 0;
  bool passed() const { return failures == 0; }
};

VerifyReport verify_sweep(const VerifyOptions& options,
                          const AlgorithmRegistry& registry = AlgorithmRegistry::global());

const std::string& verify_csv_header();
std::string to_csv_row(const VerifyRow& row);

struct RunRecord {
  std::string selector;
  std::vector<std::string> assignments;
  std::size_t repeat = 0;
  TimingStats timing;
  double rel_direct = 0.0;  // mean latency over the all-direct conv assignment
  double max_abs_err = 0.0;  // against the all-default model
  bool equivalent = false;
  double checksum = 0.0;  // sum of output elements
};

/// End-to-end latency of the model with conv2d layers swapped by each
/// selector (CLI syntax, see parse_selector). Also runs the all-"default"
/// baseline (first record) and the all-"direct" assignment used for
/// normalization.
std::vector<RunRecord> run_model(const ModelDescriptor& desc, const std::vector<std::string>& selectors,
                                 std::size_t repeat, std::size_t warmup, Precision precision, std::uint64_t seed,
                                 std::size_t batch = 1,
                                 const AlgorithmRegistry& registry = AlgorithmRegistry::global());

const std::string& run_csv_header();
std::string to_csv_row(const std::string& model, const RunRecord& record);

}  // namespace swapnet
