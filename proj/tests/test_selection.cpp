#include <gtest/gtest.h>

#include <random>

#include "swapnet/selection.hpp"
#include "swapnet/zoo.hpp"

using namespace swapnet;

namespace {

LayerMeta conv_meta(std::size_t in_channels, std::size_t occurrence = 0) {
  LayerMeta m;
  m.op = OpType::conv2d;
  m.occurrence_index = occurrence;
  m.hyperparameters = ConvParams{in_channels, 8, {3, 3}, {1, 1}, {1, 1}};
  return m;
}

AlgorithmSelector in_channels_rule() {
  return AlgorithmSelector::rule(
      [](const LayerMeta& m) -> std::string { return m.conv()->in_channels > 200 ? "smm" : "direct"; });
}

ModelDescriptor small_convnet() { return convnet_descriptor(InputShape{std::nullopt, 3, 12, 12}, 5); }

std::vector<std::size_t> conv_layer_indices(const ModelDescriptor& d) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.layers.size(); ++i)
    if (d.layers[i].op == OpType::conv2d) out.push_back(i);
  return out;
}

}  // namespace

TEST(ResolveSelector, Fixed) {
  AlgorithmRegistry reg;
  EXPECT_EQ(resolve_selector("direct", conv_meta(3), reg), "direct");
  EXPECT_EQ(resolve_selector("direct", conv_meta(512, 7), reg), "direct");
}

TEST(ResolveSelector, Sequence) {
  AlgorithmRegistry reg;
  auto seq = AlgorithmSelector::sequence({"direct", "smm"});
  EXPECT_EQ(resolve_selector(seq, conv_meta(3, 0), reg), "direct");
  EXPECT_EQ(resolve_selector(seq, conv_meta(3, 1), reg), "smm");
  EXPECT_EQ(resolve_selector(seq, conv_meta(3, 2), reg), "default");
}

TEST(ResolveSelector, Rule) {
  AlgorithmRegistry reg;
  EXPECT_EQ(resolve_selector(in_channels_rule(), conv_meta(256), reg), "smm");
  EXPECT_EQ(resolve_selector(in_channels_rule(), conv_meta(3), reg), "direct");
}

TEST(ResolveSelector, UnknownNamesRejected) {
  AlgorithmRegistry reg;
  auto bad = AlgorithmSelector::rule([](const LayerMeta&) -> std::string { return "fft"; });
  EXPECT_THROW(resolve_selector(bad, conv_meta(3), reg), UnknownAlgorithm);
  EXPECT_THROW(resolve_selector("fft", conv_meta(3), reg), UnknownAlgorithm);
  for (const char* kw : {"default", "custom", "keep", "auto"}) EXPECT_EQ(resolve_selector(kw, conv_meta(3), reg), kw);
}

TEST(ResolveSelector, EmptyNamesRejected) {
  EXPECT_ANY_THROW(AlgorithmSelector::fixed(""));
  EXPECT_ANY_THROW(AlgorithmSelector::sequence({"direct", ""}));
}

TEST(SwapBackend, FixedDirect) {
  ModelDescriptor d = small_convnet();
  Model<double> m = swap_backend<double>(d, {{OpType::conv2d, "direct"}});
  EXPECT_EQ(m.assignments(), (std::vector<std::string>{"direct", "direct", "direct", "direct", "direct", "direct"}));
}

TEST(SwapBackend, DefaultResolvesThroughAuto) {
  ModelDescriptor d = small_convnet();
  AlgorithmRegistry reg;
  Model<double> m = swap_backend<double>(d, {}, reg);
  // Both convs are 3x3, stride 1, dilation 1.
  EXPECT_EQ(m.assignments()[0], "winograd");
  EXPECT_EQ(m.assignments()[3], "winograd");
  EXPECT_EQ(m.assignments()[1], "direct");
}

TEST(SwapBackend, DescriptorFieldUsedWhenOpAbsent) {
  ModelDescriptor d = small_convnet();
  d.layers[0].algorithm = "kn2row";
  AlgorithmRegistry reg;
  Model<double> m = swap_backend<double>(d, {}, reg);
  EXPECT_EQ(m.assignments()[0], "kn2row");
  Model<double> keep = swap_backend<double>(d, {{OpType::conv2d, "keep"}}, reg);
  EXPECT_EQ(keep.assignments()[0], "kn2row");
  EXPECT_EQ(keep.assignments()[3], "winograd");
}

TEST(SwapBackend, Vgg16RuleCountsDeepLayers) {
  ModelDescriptor d = vgg16_descriptor(InputShape{1, 3, 32, 32}, 1, 8);
  // Channel counts are divided by 8 here, so use the full-width threshold
  // scaled the same way.
  auto rule = AlgorithmSelector::rule(
      [](const LayerMeta& m) -> std::string { return m.conv()->in_channels > 200 / 8 ? "smm" : "direct"; });
  Model<double> m = swap_backend<double>(d, {{OpType::conv2d, rule}});
  std::size_t smm = 0, direct = 0;
  for (std::size_t i : conv_layer_indices(d)) {
    const std::string a = m.assignments()[i];
    smm += a == "smm";
    direct += a == "direct";
  }
  EXPECT_EQ(smm, 8u);
  EXPECT_EQ(direct, 5u);
}

TEST(SwapBackend, Vgg16LayerList) {
  ModelDescriptor d = vgg16_descriptor(InputShape{1, 3, 32, 32}, 1, 16);
  std::vector<std::size_t> in_channels;
  for (std::size_t i : conv_layer_indices(d))
    in_channels.push_back(std::get<Conv2dSpec<double>>(d.layers[i].spec).params.in_channels);
  EXPECT_EQ(in_channels, (std::vector<std::size_t>{3, 4, 4, 8, 8, 16, 16, 16, 32, 32, 32, 32, 32}));
}

TEST(SwapBackend, UnsupportedNamesLayer) {
  ModelDescriptor d = vgg16_descriptor(InputShape{1, 3, 32, 32}, 1, 16);
  std::mt19937_64 rng(1);
  d.layers[2] = make_conv2d(random_conv2d_spec(ConvParams{4, 4, {5, 5}, {1, 1}, {2, 2}}, true, rng));
  try {
    swap_backend<double>(d, {{OpType::conv2d, "winograd"}});
    FAIL() << "expected UnsupportedConfiguration";
  } catch (const UnsupportedConfiguration& e) {
    EXPECT_NE(std::string(e.what()).find("layer 2"), std::string::npos) << e.what();
  }
}

TEST(SwapBackend, SmmOnLinearIsUnsupported) {
  ModelDescriptor d = vgg16_descriptor(InputShape{1, 3, 32, 32}, 1, 16);
  EXPECT_THROW(swap_backend<double>(d, {{OpType::linear, "smm"}}), UnsupportedConfiguration);
}

TEST(SwapOperation, SequenceAndKeep) {
  ModelDescriptor d = small_convnet();
  Model<double> m = swap_backend<double>(d);
  const auto before = m.assignments();

  swap_operation(m, OpType::conv2d, "keep");
  EXPECT_EQ(m.assignments(), before);

  swap_operation(m, OpType::conv2d, AlgorithmSelector::sequence({"direct", "smm"}));
  EXPECT_EQ(m.assignments()[0], "direct");
  EXPECT_EQ(m.assignments()[3], "smm");

  swap_operation(m, OpType::conv2d, "smm");
  swap_operation(m, OpType::conv2d, "keep");
  EXPECT_EQ(m.assignments()[0], "smm");
  EXPECT_EQ(m.assignments()[3], "smm");
}

TEST(SwapOperation, TouchesOnlyTargetOp) {
  ModelDescriptor d = vgg16_descriptor(InputShape{1, 3, 32, 32}, 2, 16);
  Model<double> m = swap_backend<double>(d);
  const auto before = m.assignments();
  swap_operation(m, OpType::conv2d, "kn2row");
  const auto after = m.assignments();
  for (std::size_t i = 0; i < d.layers.size(); ++i) {
    if (d.layers[i].op == OpType::conv2d) {
      EXPECT_EQ(after[i], "kn2row");
    } else {
      EXPECT_EQ(after[i], before[i]) << i;
    }
  }
}

TEST(SwapOperation, FailureLeavesModelUntouched) {
  ModelDescriptor d = small_convnet();
  Model<double> m = swap_backend<double>(d);
  const auto before = m.assignments();
  EXPECT_THROW(swap_operation(m, OpType::conv2d, AlgorithmSelector::sequence({"smm", "fft"})), UnknownAlgorithm);
  EXPECT_EQ(m.assignments(), before);
}

TEST(SwapEquivalence, EveryBuiltinSelectorMatchesDefault) {
  ModelDescriptor d = small_convnet();
  std::mt19937_64 rng(9);
  Tensor<double> x = random_tensor<double>({3, 3, 12, 12}, rng);
  Tensor<double> reference = swap_backend<double>(d).forward(x);
  for (const char* algo : {"direct", "im2col", "kn2row", "smm", "winograd", "auto"}) {
    EXPECT_LE(max_abs_diff(swap_backend<double>(d, {{OpType::conv2d, algo}}).forward(x), reference), 1e-6) << algo;
  }
  Tensor<float> xf = x.cast<float>();
  Tensor<float> reference_f = swap_backend<float>(d).forward(xf);
  for (const char* algo : {"direct", "im2col", "kn2row", "smm"}) {
    EXPECT_LE(max_abs_diff(swap_backend<float>(d, {{OpType::conv2d, algo}}).forward(xf), reference_f), 1e-4) << algo;
  }
}

TEST(ParseRule, Examples) {
  AlgorithmSelector r = parse_rule("in_channels>200:smm;*:direct");
  EXPECT_EQ(resolve_selector(r, conv_meta(256)), "smm");
  EXPECT_EQ(resolve_selector(r, conv_meta(3)), "direct");

  AlgorithmSelector multi = parse_rule("# comment\nkernel_h==3 & in_channels<=4 : winograd\noccurrence>=1:kn2row");
  EXPECT_EQ(resolve_selector(multi, conv_meta(4)), "winograd");
  EXPECT_EQ(resolve_selector(multi, conv_meta(5, 1)), "kn2row");
  EXPECT_EQ(resolve_selector(multi, conv_meta(5, 0)), "default");
}

TEST(ParseRule, ConvFieldsFalseOnOtherOps) {
  LayerMeta relu;
  relu.op = OpType::relu;
  EXPECT_EQ(resolve_selector(parse_rule("in_channels>0:smm;*:direct"), relu), "direct");
}

TEST(ParseRule, Errors) {
  EXPECT_ANY_THROW(parse_rule("bogus>1:smm"));
  EXPECT_ANY_THROW(parse_rule("in_channels>:smm"));
  EXPECT_ANY_THROW(parse_rule("in_channels>1"));
  EXPECT_ANY_THROW(parse_rule("in_channels~1:smm"));
}

TEST(ParseSelector, Kinds) {
  EXPECT_TRUE(std::holds_alternative<std::string>(parse_selector("smm").choice()));
  EXPECT_TRUE(std::holds_alternative<std::vector<std::string>>(parse_selector("direct,smm").choice()));
  EXPECT_TRUE(std::holds_alternative<RuleFn>(parse_selector("*:direct").choice()));
  EXPECT_EQ(std::get<std::vector<std::string>>(parse_selector("direct, smm").choice()),
            (std::vector<std::string>{"direct", "smm"}));
}

TEST(LayerMetaOccurrence, IncreasesPerOpType) {
  ModelDescriptor d = vgg16_descriptor(InputShape{1, 3, 32, 32}, 1, 16);
  std::map<OpType, std::vector<std::size_t>> seen;
  auto recorder = AlgorithmSelector::rule([&](const LayerMeta& m) -> std::string {
    seen[m.op].push_back(m.occurrence_index);
    return "default";
  });
  swap_backend<double>(d, {{OpType::conv2d, recorder}, {OpType::relu, recorder}, {OpType::maxpool2d, recorder}});
  for (const auto& [op, occ] : seen) {
    for (std::size_t i = 0; i < occ.size(); ++i) EXPECT_EQ(occ[i], i) << to_string(op);
  }
  EXPECT_EQ(seen[OpType::conv2d].size(), 13u);
  EXPECT_EQ(seen[OpType::maxpool2d].size(), 5u);
}
