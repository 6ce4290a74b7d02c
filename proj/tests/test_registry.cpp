#include <gtest/gtest.h>

#include <atomic>
#include <memory>
#include <random>

#include "swapnet/registry.hpp"
#include "swapnet/selection.hpp"
#include "swapnet/zoo.hpp"

using namespace swapnet;

namespace {

RegistryEntry counting_conv(std::string name, std::shared_ptr<std::atomic<int>> calls, bool use_as_default = false) {
  return RegistryEntry::conv2d(
      std::move(name),
      [calls](const auto& x, const auto& spec) {
        ++*calls;
        return conv2d_direct(x, spec);
      },
      use_as_default);
}

Layer<double> small_conv() {
  std::mt19937_64 rng(1);
  return make_conv2d(random_conv2d_spec(ConvParams{2, 3, {3, 3}}, true, rng));
}

}  // namespace

TEST(Registry, RegisteredNameIsSelectable) {
  AlgorithmRegistry reg;
  auto calls = std::make_shared<std::atomic<int>>(0);
  reg.register_algorithm(counting_conv("my_conv", calls));

  std::mt19937_64 rng(2);
  Layer<double> layer = small_conv();
  Tensor<double> x = random_tensor<double>({1, 2, 6, 6}, rng);
  LayerFn<double> fn = lookup_algorithm<double>(reg, OpType::conv2d, "my_conv");
  EXPECT_EQ(fn(x, layer), run_builtin(layer, x, ConvAlgo::direct));
  EXPECT_EQ(*calls, 1);
  EXPECT_TRUE(is_known_algorithm_name(reg, OpType::conv2d, "my_conv"));
}

TEST(Registry, ReservedNamesRefused) {
  AlgorithmRegistry reg;
  auto calls = std::make_shared<std::atomic<int>>(0);
  for (const char* name : {"direct", "im2col", "kn2row", "smm", "winograd", "auto", "custom", "default", "keep"}) {
    EXPECT_THROW(reg.register_algorithm(counting_conv(name, calls)), RegistrationError) << name;
  }
  EXPECT_THROW(reg.register_algorithm(counting_conv("", calls)), RegistrationError);
}

TEST(Registry, DuplicateRefused) {
  AlgorithmRegistry reg;
  auto calls = std::make_shared<std::atomic<int>>(0);
  reg.register_algorithm(counting_conv("mine", calls));
  EXPECT_THROW(reg.register_algorithm(counting_conv("mine", calls)), RegistrationError);
}

TEST(Registry, CustomAlias) {
  AlgorithmRegistry reg;
  EXPECT_THROW(lookup_algorithm<double>(reg, OpType::conv2d, "custom"), UnknownAlgorithm);

  auto a = std::make_shared<std::atomic<int>>(0);
  auto b = std::make_shared<std::atomic<int>>(0);
  reg.register_algorithm(counting_conv("first", a));
  std::mt19937_64 rng(3);
  Tensor<double> x = random_tensor<double>({1, 2, 5, 5}, rng);
  lookup_algorithm<double>(reg, OpType::conv2d, "custom")(x, small_conv());
  EXPECT_EQ(*a, 1);

  reg.register_algorithm(counting_conv("second", b));
  EXPECT_THROW(lookup_algorithm<double>(reg, OpType::conv2d, "custom"), AmbiguousCustom);
  lookup_algorithm<double>(reg, OpType::conv2d, "second")(x, small_conv());
  EXPECT_EQ(*b, 1);
}

TEST(Registry, UseAsDefault) {
  AlgorithmRegistry reg;
  auto calls = std::make_shared<std::atomic<int>>(0);
  reg.register_algorithm(counting_conv("preferred", calls, true));
  ASSERT_NE(reg.default_entry(OpType::conv2d), nullptr);
  EXPECT_EQ(reg.default_entry(OpType::conv2d)->name, "preferred");
  EXPECT_EQ(reg.default_entry(OpType::linear), nullptr);
  EXPECT_THROW(reg.register_algorithm(counting_conv("also_preferred", calls, true)), RegistrationError);

  ModelDescriptor desc = convnet_descriptor(InputShape{std::nullopt, 3, 8, 8}, 1);
  Model<double> m = swap_backend<double>(desc, {}, reg);
  EXPECT_EQ(m.assignments()[0], "preferred");
  EXPECT_EQ(m.assignments()[3], "preferred");
  std::mt19937_64 rng(4);
  m.forward(random_tensor<double>({1, 3, 8, 8}, rng));
  EXPECT_EQ(*calls, 2);
}

TEST(Registry, BuiltinsTakePrecedence) {
  AlgorithmRegistry reg;
  auto calls = std::make_shared<std::atomic<int>>(0);
  reg.register_algorithm(counting_conv("mine", calls, true));
  std::mt19937_64 rng(5);
  Tensor<double> x = random_tensor<double>({1, 2, 5, 5}, rng);
  Layer<double> layer = small_conv();
  EXPECT_EQ(lookup_algorithm<double>(reg, OpType::conv2d, "im2col")(x, layer),
            run_builtin(layer, x, ConvAlgo::im2col));
  EXPECT_EQ(*calls, 0);
}

TEST(Registry, UnknownAndWrongOp) {
  AlgorithmRegistry reg;
  auto calls = std::make_shared<std::atomic<int>>(0);
  reg.register_algorithm(counting_conv("convonly", calls));
  EXPECT_THROW(lookup_algorithm<double>(reg, OpType::conv2d, "nope"), UnknownAlgorithm);
  EXPECT_THROW(lookup_algorithm<double>(reg, OpType::linear, "convonly"), UnsupportedConfiguration);
  EXPECT_THROW(lookup_algorithm<double>(reg, OpType::linear, "smm"), UnsupportedConfiguration);
  EXPECT_NO_THROW(lookup_algorithm<double>(reg, OpType::linear, "direct"));
}

TEST(Registry, FrozenRefusesRegistration) {
  AlgorithmRegistry reg;
  reg.freeze();
  EXPECT_TRUE(reg.frozen());
  auto calls = std::make_shared<std::atomic<int>>(0);
  EXPECT_THROW(reg.register_algorithm(counting_conv("late", calls)), RegistrationError);
}

TEST(Registry, RegistrationDoesNotAffectBuiltinModels) {
  ModelDescriptor desc = convnet_descriptor(InputShape{std::nullopt, 3, 8, 8}, 2);
  std::mt19937_64 rng(6);
  Tensor<double> x = random_tensor<double>({2, 3, 8, 8}, rng);
  AlgorithmRegistry empty, populated;
  auto calls = std::make_shared<std::atomic<int>>(0);
  populated.register_algorithm(counting_conv("extra", calls));
  SelectorMap sel{{OpType::conv2d, "im2col"}};
  EXPECT_EQ(swap_backend<double>(desc, sel, empty).forward(x), swap_backend<double>(desc, sel, populated).forward(x));
  EXPECT_EQ(swap_backend<double>(desc, {}, empty).forward(x), swap_backend<double>(desc, {}, populated).forward(x));
  EXPECT_EQ(*calls, 0);
}

TEST(Registry, ModelsKeepBindingsAfterRegistryChanges) {
  AlgorithmRegistry reg;
  auto calls = std::make_shared<std::atomic<int>>(0);
  reg.register_algorithm(counting_conv("only", calls));
  ModelDescriptor desc = convnet_descriptor(InputShape{std::nullopt, 3, 8, 8}, 3);
  Model<double> m = swap_backend<double>(desc, {{OpType::conv2d, "custom"}}, reg);
  reg.register_algorithm(counting_conv("another", calls));
  std::mt19937_64 rng(7);
  m.forward(random_tensor<double>({1, 3, 8, 8}, rng));
  EXPECT_EQ(*calls, 2);
}
