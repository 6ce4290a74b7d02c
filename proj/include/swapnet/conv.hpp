#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "swapnet/tensor.hpp"

namespace swapnet {

struct Extent2 {
  std::size_t h = 1;
  std::size_t w = 1;

  friend bool operator==(const Extent2&, const Extent2&) = default;
};

// Convolution geometry without the parameters.
struct ConvParams {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  Extent2 kernel{1, 1};
  Extent2 stride{1, 1};
  Extent2 padding{0, 0};
  Extent2 dilation{1, 1};

  friend bool operator==(const ConvParams&, const ConvParams&) = default;
};

template <typename T>
struct Conv2dSpec {
  ConvParams params;
  Tensor<T> weight;  // (out_channels, in_channels, kh, kw)
  std::optional<Tensor<T>> bias;  // (out_channels)

  template <typename U>
  Conv2dSpec<U> cast() const {
    std::optional<Tensor<U>> b;
    if (bias) b = bias->template cast<U>();
    return Conv2dSpec<U>{params, weight.template cast<U>(), std::move(b)};
  }

  friend bool operator==(const Conv2dSpec&, const Conv2dSpec&) = default;
};

// Throws ShapeError when weight/bias disagree with the declared geometry or a
// stride/dilation is zero.
void validate(const ConvParams& params);
template <typename T>
void validate(const Conv2dSpec<T>& spec);

enum class ConvAlgo { direct, im2col, kn2row, smm, winograd };

inline constexpr std::array<ConvAlgo, 5> kConvAlgos = {ConvAlgo::direct, ConvAlgo::im2col, ConvAlgo::kn2row,
                                                      ConvAlgo::smm, ConvAlgo::winograd};

std::string_view to_string(ConvAlgo algo);
std::optional<ConvAlgo> parse_conv_algo(std::string_view name);

/// (N, C, H, W) -> (N, out_channels, Hout, Wout) with
/// Hout = floor((H + 2ph - dh*(kh-1) - 1) / sh) + 1.
///
/// Throws ShapeError on rank or channel mismatch, or when the dilated kernel
/// does not fit inside the padded input.
Shape conv2d_output_shape(const ConvParams& params, const Shape& input_shape);

// Reason the algorithm cannot run this geometry, or nullopt if it can.
std::optional<std::string> unsupported_reason(ConvAlgo algo, const ConvParams& params);
bool supports(ConvAlgo algo, const ConvParams& params);

/// Heuristic pick among the built-ins: winograd for 3x3 / stride 1 /
/// dilation 1, im2col for 1x1 kernels or when the patch length C*kh*kw is at
/// least 32, direct otherwise. Deterministic and always returns an algorithm
/// that supports `params`.
ConvAlgo conv2d_auto(const Shape& input_shape, const ConvParams& params);

template <typename T>
Tensor<T> conv2d_direct(const Tensor<T>& input, const Conv2dSpec<T>& spec);

/// Unrolls the receptive fields of batch element `batch` into a
/// (C*kh*kw) x (Hout*Wout) matrix. Column q is the patch for output pixel q
/// (row-major output order); row (c*kh + i)*kw + j is kernel tap (c, i, j).
/// Taps that fall in the padding read as zero.
template <typename T>
Tensor<T> im2col_transform(const Tensor<T>& input, const ConvParams& params, std::size_t batch = 0);

template <typename T>
Tensor<T> conv2d_im2col(const Tensor<T>& input, const Conv2dSpec<T>& spec);

// Per kernel tap: a 1x1 convolution GEMM over the unpadded input, then a
// shifted, stride-subsampled accumulation into the output.
template <typename T>
Tensor<T> conv2d_kn2row(const Tensor<T>& input, const Conv2dSpec<T>& spec);

// Sum of shifted, zero-packed input planes each scaled by one kernel weight.
// No matrix products.
template <typename T>
Tensor<T> conv2d_smm(const Tensor<T>& input, const Conv2dSpec<T>& spec);

/// Winograd minimal filtering F(2x2, 3x3). Requires a 3x3 kernel with unit
/// stride and dilation; throws UnsupportedConfiguration otherwise.
template <typename T>
Tensor<T> conv2d_winograd(const Tensor<T>& input, const Conv2dSpec<T>& spec);

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Conv2dSpec<T>& spec, ConvAlgo algo);

}  // namespace swapnet
