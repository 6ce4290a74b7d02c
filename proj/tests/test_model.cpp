#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "swapnet/model.hpp"
#include "swapnet/selection.hpp"
#include "swapnet/zoo.hpp"

using namespace swapnet;

namespace {

std::string expect_schema_error(std::string_view doc) {
  try {
    load_model(doc);
  } catch (const SchemaError& e) {
    return e.what();
  }
  ADD_FAILURE() << "document loaded without error";
  return {};
}

ModelDescriptor random_descriptor(std::mt19937_64& rng) {
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  ModelDescriptor d;
  d.name = "fuzz";
  d.input_shape = InputShape{std::nullopt, pick(1, 4), pick(6, 14), pick(6, 14)};
  Shape shape = d.input_shape.with_batch();
  const std::size_t depth = pick(1, 6);
  bool flat = false;
  for (std::size_t i = 0; i < depth; ++i) {
    Layer<double> layer;
    if (flat) {
      layer = i % 2 ? make_relu<double>() : make_linear(random_linear_spec(shape[1], pick(1, 6), true, rng));
    } else {
      switch (pick(0, 5)) {
        case 0: {
          ConvParams p{shape[1], pick(1, 5), {pick(1, 3), pick(1, 3)}, {pick(1, 2), pick(1, 2)}, {pick(0, 1), pick(0, 1)}};
          layer = make_conv2d(random_conv2d_spec(p, pick(0, 1) == 1, rng));
          break;
        }
        case 1:
          layer = make_relu<double>();
          break;
        case 2:
          layer = make_maxpool2d<double>(Pool2dSpec{{2, 2}, {pick(1, 2), pick(1, 2)}, {pick(0, 1), 0}});
          break;
        case 3:
          layer = make_avgpool2d<double>(Pool2dSpec{{pick(1, 3), 2}, {1, 2}});
          break;
        case 4:
          layer = make_adaptive_avgpool2d<double>(Extent2{pick(1, shape[2]), pick(1, shape[3])});
          break;
        default:
          layer = make_flatten<double>(1);
          flat = true;
      }
    }
    try {
      Shape next = layer_output_shape(layer, shape);
      d.layers.push_back(std::move(layer));
      shape = std::move(next);
    } catch (const ShapeError&) {
      if (layer.op == OpType::flatten) flat = false;
    }
  }
  return d;
}

}  // namespace

TEST(LoadModel, ConvNetFile) {
  ModelDescriptor d = load_model_file(SWAPNET_MODELS_DIR "/convnet.json");
  ASSERT_EQ(d.layers.size(), 6u);
  const std::vector<OpType> ops{OpType::conv2d, OpType::relu,    OpType::maxpool2d,
                                OpType::conv2d, OpType::relu,    OpType::flatten};
  for (std::size_t i = 0; i < ops.size(); ++i) EXPECT_EQ(d.layers[i].op, ops[i]) << i;
  const auto& c1 = std::get<Conv2dSpec<double>>(d.layers[0].spec).params;
  const auto& c2 = std::get<Conv2dSpec<double>>(d.layers[3].spec).params;
  EXPECT_EQ(c1, (ConvParams{3, 16, {3, 3}, {1, 1}, {1, 1}}));
  EXPECT_EQ(c2, (ConvParams{16, 32, {3, 3}, {1, 1}, {1, 1}}));
  EXPECT_FALSE(d.input_shape.batch.has_value());
}

TEST(LoadModel, MinimalDocument) {
  ModelDescriptor d = load_model(R"({"name": "tiny", "input_shape": [1, 1, 3, 3], "layers": [
    {"type": "conv2d", "in_channels": 1, "out_channels": 1, "kernel": [2, 2], "stride": [1, 1],
     "padding": [0, 0], "dilation": [1, 1], "weight": [1, 0, 0, 1], "bias": null, "algorithm": "smm"},
    {"type": "flatten", "start_dim": 1}]})");
  EXPECT_EQ(d.layers[0].algorithm, "smm");
  Model<double> m = swap_backend<double>(d);
  EXPECT_EQ(m.assignments()[0], "smm");
  Tensor<double> out = m.forward(Tensor<double>({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9}));
  EXPECT_EQ(out, Tensor<double>({1, 4}, {6, 8, 12, 14}));
}

TEST(LoadModel, EmptyModelIsIdentity) {
  ModelDescriptor d = load_model(R"({"name": "empty", "input_shape": ["*", 2, 3, 3], "layers": []})");
  EXPECT_TRUE(d.layers.empty());
  std::mt19937_64 rng(1);
  Tensor<double> x = random_tensor<double>({4, 2, 3, 3}, rng);
  EXPECT_EQ(swap_backend<double>(d).forward(x), x);
}

TEST(LoadModel, ShapeChainBreak) {
  const std::string doc = R"({"name": "broken", "input_shape": [1, 1, 4, 4], "layers": [
    {"type": "conv2d", "in_channels": 1, "out_channels": 16, "kernel": [1, 1], "weight": [)" +
                          [] {
                            std::string s;
                            for (int i = 0; i < 16; ++i) s += (i ? ",1" : "1");
                            return s;
                          }() +
                          R"(], "bias": null},
    {"type": "conv2d", "in_channels": 17, "out_channels": 1, "kernel": [1, 1], "weight": [)" +
                          [] {
                            std::string s;
                            for (int i = 0; i < 17; ++i) s += (i ? ",1" : "1");
                            return s;
                          }() +
                          R"(], "bias": null}]})";
  const std::string msg = expect_schema_error(doc);
  EXPECT_NE(msg.find("layer 1"), std::string::npos) << msg;
}

TEST(LoadModel, WeightLengthMismatchNamesLayer) {
  const std::string msg = expect_schema_error(R"({"name": "x", "input_shape": [1, 1, 4, 4], "layers": [
    {"type": "relu"},
    {"type": "conv2d", "in_channels": 1, "out_channels": 1, "kernel": [2, 2], "weight": [1, 2, 3]}]})");
  EXPECT_NE(msg.find("layer 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("3 values, expected 4"), std::string::npos) << msg;
}

TEST(LoadModel, SchemaViolations) {
  expect_schema_error("not json");
  expect_schema_error(R"({"name": "x", "layers": []})");
  expect_schema_error(R"({"name": "x", "input_shape": [1, 1, 4], "layers": []})");
  expect_schema_error(R"({"name": "x", "input_shape": ["?", 1, 4, 4], "layers": []})");
  expect_schema_error(R"({"name": "x", "input_shape": [1, 1, 4, 4], "layers": [{"type": "softmax"}]})");
  expect_schema_error(R"({"name": "x", "input_shape": [1, 1, 4, 4], "layers": [{"type": "relu", "alpha": 1}]})");
  expect_schema_error(
      R"({"name": "x", "input_shape": [1, 1, 4, 4], "layers": [{"type": "avgpool2d", "kernel": [2, 2], "dilation": [2, 2]}]})");
  expect_schema_error(
      R"({"name": "x", "input_shape": [1, 1, 4, 4], "layers": [{"type": "maxpool2d", "kernel": [2, 2], "padding": [2, 0]}]})");
  const std::string msg = expect_schema_error(
      R"({"name": "x", "input_shape": [1, 1, 4, 4], "layers": [{"type": "relu"}, {"type": "linear", "in_features": 2, "out_features": 1, "weight": [1, 1], "bias": null}]})");
  EXPECT_NE(msg.find("layer 1"), std::string::npos) << msg;
}

TEST(LoadModel, PoolStrideDefaultsToKernel) {
  ModelDescriptor d = load_model(
      R"({"name": "p", "input_shape": [1, 1, 8, 8], "layers": [{"type": "maxpool2d", "kernel": 2}]})");
  EXPECT_EQ(std::get<Pool2dSpec>(d.layers[0].spec), (Pool2dSpec{{2, 2}, {2, 2}}));
}

TEST(DumpModel, RoundTrip) {
  EXPECT_EQ(load_model(dump_model(convnet_descriptor(InputShape{std::nullopt, 3, 16, 16}, 3))),
            convnet_descriptor(InputShape{std::nullopt, 3, 16, 16}, 3));
  ModelDescriptor vgg = vgg16_descriptor(InputShape{2, 3, 32, 32}, 4, 16, 5);
  vgg.layers[0].algorithm = "kn2row";
  EXPECT_EQ(load_model(dump_model(vgg)), vgg);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 30; ++i) {
    ModelDescriptor d = random_descriptor(rng);
    EXPECT_EQ(load_model(dump_model(d)), d);
  }
}

TEST(Forward, ConvNetBenchmarkShapeStatically) {
  ModelDescriptor d = load_model_file(SWAPNET_MODELS_DIR "/convnet.json");
  d.input_shape = InputShape{std::nullopt, 3, 224, 224};
  EXPECT_EQ(propagate_shapes(d, 10).back(), (Shape{10, 32 * 112 * 112}));
}

TEST(Forward, ConvNetBenchmarkShape) {
  ModelDescriptor d = convnet_descriptor(InputShape{std::nullopt, 3, 224, 224}, 0);
  std::mt19937_64 rng(6);
  Tensor<float> x = random_tensor<float>({10, 3, 224, 224}, rng);
  EXPECT_EQ(swap_backend<float>(d, {{OpType::conv2d, "im2col"}}).forward(x).shape(), (Shape{10, 32 * 112 * 112}));
}

TEST(Forward, RejectsWrongInputShape) {
  Model<double> m = swap_backend<double>(convnet_descriptor(InputShape{2, 3, 8, 8}, 0));
  EXPECT_THROW(m.forward(Tensor<double>::zeros({1, 3, 8, 8})), ShapeError);
  EXPECT_THROW(m.forward(Tensor<double>::zeros({2, 3, 8, 9})), ShapeError);
  EXPECT_NO_THROW(m.forward(Tensor<double>::zeros({2, 3, 8, 8})));
}

TEST(Forward, ShapesMatchPropagation) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    ModelDescriptor d = random_descriptor(rng);
    const std::size_t batch = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
    const std::vector<Shape> shapes = propagate_shapes(d, batch);
    Tensor<double> x = random_tensor<double>(d.input_shape.with_batch(batch), rng);
    Model<double> m = swap_backend<double>(d);
    EXPECT_EQ(m.forward(x).shape(), shapes.back()) << dump_model(d).substr(0, 200);
  }
}

TEST(Forward, AssignmentsAgreeAcrossBuiltins) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    ModelDescriptor d = random_descriptor(rng);
    Tensor<double> x = random_tensor<double>(d.input_shape.with_batch(2), rng);
    Tensor<double> reference = swap_backend<double>(d, {{OpType::conv2d, "direct"}}).forward(x);
    for (const char* algo : {"im2col", "kn2row", "smm", "auto"}) {
      EXPECT_LE(max_abs_diff(swap_backend<double>(d, {{OpType::conv2d, algo}}).forward(x), reference), 1e-6) << algo;
    }
  }
}

TEST(Forward, Deterministic) {
  ModelDescriptor d = vgg16_descriptor(InputShape{1, 3, 32, 32}, 9, 8);
  std::mt19937_64 rng(9);
  Tensor<float> x = random_tensor<float>({1, 3, 32, 32}, rng);
  Model<float> m = swap_backend<float>(d);
  EXPECT_EQ(m.forward(x), m.forward(x));
}

TEST(Model, RebindChangesOnlyOneLayer) {
  Model<double> m = swap_backend<double>(convnet_descriptor(InputShape{1, 3, 8, 8}, 1));
  auto before = m.assignments();
  m.rebind(3, "smm", lookup_algorithm<double>(AlgorithmRegistry::global(), OpType::conv2d, "smm"));
  before[3] = "smm";
  EXPECT_EQ(m.assignments(), before);
  EXPECT_THROW(m.rebind(99, "smm", {}), std::out_of_range);
}
