#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "swapnet/conv.hpp"
#include "swapnet/nn_ops.hpp"

namespace swapnet {

enum class OpType { conv2d, linear, relu, maxpool2d, avgpool2d, adaptiveavgpool2d, flatten };

inline constexpr std::array<OpType, 7> kOpTypes = {OpType::conv2d,    OpType::linear,    OpType::relu,
                                                   OpType::maxpool2d, OpType::avgpool2d, OpType::adaptiveavgpool2d,
                                                   OpType::flatten};

std::string_view to_string(OpType op);
std::optional<OpType> parse_op_type(std::string_view name);

struct ReluSpec {
  friend bool operator==(const ReluSpec&, const ReluSpec&) = default;
};

struct AdaptivePoolSpec {
  Extent2 output_size{1, 1};
  friend bool operator==(const AdaptivePoolSpec&, const AdaptivePoolSpec&) = default;
};

struct FlattenSpec {
  std::size_t start_dim = 1;
  friend bool operator==(const FlattenSpec&, const FlattenSpec&) = default;
};

template <typename T>
using LayerSpec = std::variant<Conv2dSpec<T>, LinearSpec<T>, Pool2dSpec, AdaptivePoolSpec, FlattenSpec, ReluSpec>;

// One operation of a sequential network plus the algorithm name assigned to
// it. In a descriptor the name is a request ("default", "smm", ...); inside a
// built Model it is the concrete implementation that runs.
template <typename T>
struct Layer {
  OpType op = OpType::relu;
  LayerSpec<T> spec = ReluSpec{};
  std::string algorithm = "default";

  template <typename U>
  Layer<U> cast() const {
    LayerSpec<U> converted = std::visit(
        [](const auto& s) -> LayerSpec<U> {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Conv2dSpec<T>> || std::is_same_v<S, LinearSpec<T>>) {
            return s.template cast<U>();
          } else {
            return s;
          }
        },
        spec);
    return Layer<U>{op, std::move(converted), algorithm};
  }

  friend bool operator==(const Layer&, const Layer&) = default;
};

// Checks that the spec alternative matches `op` and that its parameters are
// self-consistent.
template <typename T>
void validate(const Layer<T>& layer);

template <typename T>
Shape layer_output_shape(const Layer<T>& layer, const Shape& input_shape);

/// Runs the library's own implementation of the layer. `conv_algo` selects
/// the convolution kernel and is ignored for other ops.
template <typename T>
Tensor<T> run_builtin(const Layer<T>& layer, const Tensor<T>& input, ConvAlgo conv_algo = ConvAlgo::direct);

template <typename T>
Layer<T> make_conv2d(Conv2dSpec<T> spec, std::string algorithm = "default") {
  return {OpType::conv2d, std::move(spec), std::move(algorithm)};
}
template <typename T>
Layer<T> make_linear(LinearSpec<T> spec, std::string algorithm = "default") {
  return {OpType::linear, std::move(spec), std::move(algorithm)};
}
template <typename T>
Layer<T> make_relu() {
  return {OpType::relu, ReluSpec{}, "default"};
}
template <typename T>
Layer<T> make_maxpool2d(Pool2dSpec spec) {
  return {OpType::maxpool2d, spec, "default"};
}
template <typename T>
Layer<T> make_avgpool2d(Pool2dSpec spec) {
  return {OpType::avgpool2d, spec, "default"};
}
template <typename T>
Layer<T> make_adaptive_avgpool2d(Extent2 output_size) {
  return {OpType::adaptiveavgpool2d, AdaptivePoolSpec{output_size}, "default"};
}
template <typename T>
Layer<T> make_flatten(std::size_t start_dim) {
  return {OpType::flatten, FlattenSpec{start_dim}, "default"};
}

}  // namespace swapnet
