#pragma once

#include <cstdint>
#include <random>

#include "swapnet/model.hpp"

namespace swapnet {

// Uniform values in [-1, 1).
template <typename T>
Tensor<T> random_tensor(Shape shape, std::mt19937_64& rng);

// Kaiming-uniform weights (bound sqrt(6 / fan_in)) keep activations O(1)
// through deep ReLU stacks; bias uniform in [-0.1, 0.1).
Conv2dSpec<double> random_conv2d_spec(const ConvParams& params, bool with_bias, std::mt19937_64& rng);
LinearSpec<double> random_linear_spec(std::size_t in_features, std::size_t out_features, bool with_bias,
                                      std::mt19937_64& rng);

/// Small two-conv network: conv 3->16 k3 p1, relu, maxpool 2/2,
/// conv 16->32 k3 p1, relu, flatten(1).
ModelDescriptor convnet_descriptor(InputShape input, std::uint64_t seed);

/// VGG16 feature stack (13 3x3/pad-1 convs with ReLU, 5 max pools) followed
/// by adaptive average pooling to 1x1, flatten and a two-layer classifier
/// (512 -> 256 -> classes). Channel counts are divided by `width_divisor`.
ModelDescriptor vgg16_descriptor(InputShape input, std::uint64_t seed, std::size_t width_divisor = 1,
                                 std::size_t classes = 10);

}  // namespace swapnet
