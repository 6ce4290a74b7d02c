#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "swapnet/bench.hpp"
#include "swapnet/zoo.hpp"

using namespace swapnet;

namespace {

std::size_t count_fields(const std::string& row) {
  return static_cast<std::size_t>(std::count(row.begin(), row.end(), ',')) + 1;
}

}  // namespace

TEST(Summarize, SingleSampleHasZeroSpread) {
  TimingStats s = summarize({0.25});
  EXPECT_EQ(s.mean_s, 0.25);
  EXPECT_EQ(s.min_s, 0.25);
  EXPECT_EQ(s.stddev_s, 0.0);
}

TEST(Summarize, PopulationStddev) {
  TimingStats s = summarize({1.0, 3.0});
  EXPECT_DOUBLE_EQ(s.mean_s, 2.0);
  EXPECT_DOUBLE_EQ(s.min_s, 1.0);
  EXPECT_DOUBLE_EQ(s.stddev_s, 1.0);
}

TEST(TimeRepeated, RunsWarmupPlusRepeat) {
  int calls = 0;
  auto samples = time_repeated([&] { ++calls; }, 4, 2);
  EXPECT_EQ(samples.size(), 4u);
  EXPECT_EQ(calls, 6);
}

TEST(BenchConv, HeaderIsStable) {
  EXPECT_EQ(bench_csv_header(),
            "op,algorithm,n,c,h,w,kernel,stride,padding,dilation,repeat,mean_s,min_s,stddev_s,max_abs_err,status");
}

TEST(BenchConv, OneRecordPerAlgorithm) {
  ConvCase c{{1, 3, 16, 16}, ConvParams{3, 4, {3, 3}, {1, 1}, {1, 1}}};
  auto records = bench_conv(c, {"direct", "im2col", "smm"}, 2, 0, Precision::f32, 0);
  ASSERT_EQ(records.size(), 3u);
  for (const auto& r : records) {
    EXPECT_EQ(r.status, "ok") << r.algorithm;
    EXPECT_GT(r.timing.mean_s, 0.0);
    EXPECT_EQ(r.repeat, 2u);
    EXPECT_EQ(count_fields(to_csv_row(r)), count_fields(bench_csv_header()));
  }
  EXPECT_EQ(records[0].max_abs_err, 0.0);
}

TEST(BenchConv, UnsupportedIsReported) {
  ConvCase c{{1, 2, 12, 12}, ConvParams{2, 2, {5, 5}}};
  auto records = bench_conv(c, {"winograd"}, 1, 0, Precision::f32, 0);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].status, "unsupported");
  const std::string row = to_csv_row(records[0]);
  EXPECT_EQ(row.substr(row.size() - 12), ",unsupported");
  EXPECT_EQ(count_fields(row), count_fields(bench_csv_header()));
}

TEST(BenchConv, RowFormat) {
  ConvCase c{{2, 3, 10, 12}, ConvParams{3, 4, {3, 1}, {2, 1}, {1, 0}, {1, 1}}};
  auto records = bench_conv(c, {"im2col"}, 1, 0, Precision::f64, 0);
  EXPECT_EQ(to_csv_row(records[0]).rfind("conv2d,im2col,2,3,10,12,3x1,2x1,1x0,1x1,1,", 0), 0u) << to_csv_row(records[0]);
}

TEST(Tolerance, PerPrecisionAndAlgorithm) {
  EXPECT_EQ(conv_tolerance("smm", Precision::f64), 1e-6);
  EXPECT_EQ(conv_tolerance("smm", Precision::f32), 1e-4);
  EXPECT_EQ(conv_tolerance("winograd", Precision::f64), 1e-4);
  EXPECT_EQ(conv_tolerance("winograd", Precision::f32), 1e-3);
}

TEST(RandomConvCase, WithinStatedRanges) {
  std::mt19937_64 rng(0);
  std::size_t winograd_family = 0;
  for (int i = 0; i < 400; ++i) {
    ConvCase c = random_conv_case(rng);
    const ConvParams& p = c.params;
    EXPECT_NO_THROW(conv2d_output_shape(p, c.input_shape));
    EXPECT_TRUE(c.bias);
    for (std::size_t v : {p.kernel.h, p.kernel.w}) EXPECT_TRUE(v >= 1 && v <= 5);
    for (std::size_t v : {p.stride.h, p.stride.w}) EXPECT_TRUE(v >= 1 && v <= 3);
    for (std::size_t v : {p.padding.h, p.padding.w}) EXPECT_LE(v, 2u);
    for (std::size_t v : {p.dilation.h, p.dilation.w}) EXPECT_TRUE(v >= 1 && v <= 2);
    for (std::size_t v : {p.in_channels, p.out_channels}) EXPECT_TRUE(v >= 1 && v <= 8);
    for (std::size_t v : {c.input_shape[2], c.input_shape[3]}) EXPECT_TRUE(v >= 4 && v <= 16);
    EXPECT_TRUE(c.input_shape[0] >= 1 && c.input_shape[0] <= 4);
    winograd_family += supports(ConvAlgo::winograd, p);
  }
  EXPECT_GT(winograd_family, 120u);
}

TEST(VerifySweep, CleanAndDeterministic) {
  VerifyOptions opt;
  opt.configs = 40;
  opt.seed = 3;
  VerifyReport a = verify_sweep(opt), b = verify_sweep(opt);
  EXPECT_TRUE(a.passed());
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(to_csv_row(a.rows[i]), to_csv_row(b.rows[i]));
}

TEST(VerifySweep, DetectsDroppedBias) {
  VerifyOptions opt;
  opt.configs = 20;
  opt.algorithms = {"kn2row"};
  opt.drop_bias = "kn2row";
  VerifyReport r = verify_sweep(opt);
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.failures, r.checked);
}

TEST(RunModel, RecordsAndEquivalence) {
  ModelDescriptor d = convnet_descriptor(InputShape{std::nullopt, 3, 16, 16}, 0);
  auto recs = run_model(d, {"direct,smm", "keep", "in_channels>8:kn2row;*:im2col"}, 1, 0, Precision::f64, 0, 2);
  ASSERT_EQ(recs.size(), 4u);
  EXPECT_EQ(recs[0].selector, "default");
  EXPECT_EQ(recs[1].assignments[0], "direct");
  EXPECT_EQ(recs[1].assignments[3], "smm");
  EXPECT_EQ(recs[2].assignments, recs[0].assignments);
  EXPECT_EQ(recs[3].assignments[0], "im2col");
  EXPECT_EQ(recs[3].assignments[3], "kn2row");
  for (const auto& r : recs) {
    EXPECT_TRUE(r.equivalent) << r.selector;
    EXPECT_GT(r.rel_direct, 0.0);
  }
  EXPECT_EQ(recs[2].checksum, recs[0].checksum);
}

TEST(DispatchOverhead, SmallProblemIsMeasured) {
  ConvCase c{{2, 3, 32, 32}, ConvParams{3, 8, {3, 3}, {1, 1}, {1, 1}}};
  OverheadResult r = measure_dispatch_overhead(c, ConvAlgo::direct, 5, 1, Precision::f32, 0);
  EXPECT_GT(r.kernel_mean_s, 0.0);
  EXPECT_GT(r.model_mean_s, 0.0);
  EXPECT_DOUBLE_EQ(r.overhead_s, r.model_mean_s - r.kernel_mean_s);
}
