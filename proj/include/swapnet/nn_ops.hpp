#pragma once

#include <cstddef>
#include <optional>

#include "swapnet/conv.hpp"
#include "swapnet/tensor.hpp"

namespace swapnet {

// Shared by max and average pooling. Average pooling requires unit dilation.
struct Pool2dSpec {
  Extent2 kernel{1, 1};
  Extent2 stride{1, 1};
  Extent2 padding{0, 0};
  Extent2 dilation{1, 1};

  friend bool operator==(const Pool2dSpec&, const Pool2dSpec&) = default;
};

template <typename T>
struct LinearSpec {
  std::size_t in_features = 1;
  std::size_t out_features = 1;
  Tensor<T> weight;  // (out_features, in_features)
  std::optional<Tensor<T>> bias;  // (out_features)

  template <typename U>
  LinearSpec<U> cast() const {
    std::optional<Tensor<U>> b;
    if (bias) b = bias->template cast<U>();
    return LinearSpec<U>{in_features, out_features, weight.template cast<U>(), std::move(b)};
  }

  friend bool operator==(const LinearSpec&, const LinearSpec&) = default;
};

template <typename T>
void validate(const LinearSpec<T>& spec);
void validate_pool(const Pool2dSpec& spec, bool average);

// Throws ShapeError if the window does not fit or the output would be larger
// than the input on either axis (even kernel, padding kernel/2, stride 1).
Shape pool2d_output_shape(const Pool2dSpec& spec, const Shape& input_shape, bool average);
Shape linear_output_shape(std::size_t in_features, std::size_t out_features, const Shape& input_shape);
Shape adaptive_avgpool2d_output_shape(Extent2 output_size, const Shape& input_shape);
Shape flatten_output_shape(std::size_t start_dim, const Shape& input_shape);

// out = input * weight^T + bias for input (N, in_features).
template <typename T>
Tensor<T> linear(const Tensor<T>& input, const LinearSpec<T>& spec);

template <typename T>
Tensor<T> relu(const Tensor<T>& input);

// Padded positions act as -inf and never win.
template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input, const Pool2dSpec& spec);

// Mean over the in-bounds part of each window; padding is excluded from the
// divisor. Constant windows give their value back exactly.
template <typename T>
Tensor<T> avgpool2d(const Tensor<T>& input, const Pool2dSpec& spec);

/// Output index i averages input rows [floor(i*H/oh), ceil((i+1)*H/oh)),
/// columns likewise.
template <typename T>
Tensor<T> adaptive_avgpool2d(const Tensor<T>& input, Extent2 output_size);

template <typename T>
Tensor<T> flatten(const Tensor<T>& input, std::size_t start_dim);

}  // namespace swapnet
