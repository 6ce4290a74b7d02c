#include "swapnet/zoo.hpp"

#include <cmath>

namespace swapnet {

namespace {

std::vector<double> uniform(std::size_t n, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

Layer<double> conv_layer(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  ConvParams p;
  p.in_channels = in;
  p.out_channels = out;
  p.kernel = {3, 3};
  p.padding = {1, 1};
  return make_conv2d(random_conv2d_spec(p, true, rng));
}

}  // namespace

template <typename T>
Tensor<T> random_tensor(Shape shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<T> v(element_count(shape));
  for (T& x : v) x = static_cast<T>(dist(rng));
  return Tensor<T>(std::move(shape), std::move(v));
}

template Tensor<float> random_tensor<float>(Shape, std::mt19937_64&);
template Tensor<double> random_tensor<double>(Shape, std::mt19937_64&);

Conv2dSpec<double> random_conv2d_spec(const ConvParams& p, bool with_bias, std::mt19937_64& rng) {
  const std::size_t fan_in = p.in_channels * p.kernel.h * p.kernel.w;
  Shape shape{p.out_channels, p.in_channels, p.kernel.h, p.kernel.w};
  Tensor<double> weight(shape, uniform(element_count(shape), std::sqrt(6.0 / static_cast<double>(fan_in)), rng));
  std::optional<Tensor<double>> bias;
  if (with_bias) bias = Tensor<double>({p.out_channels}, uniform(p.out_channels, 0.1, rng));
  return {p, std::move(weight), std::move(bias)};
}

LinearSpec<double> random_linear_spec(std::size_t in, std::size_t out, bool with_bias, std::mt19937_64& rng) {
  Tensor<double> weight({out, in}, uniform(in * out, std::sqrt(6.0 / static_cast<double>(in)), rng));
  std::optional<Tensor<double>> bias;
  if (with_bias) bias = Tensor<double>({out}, uniform(out, 0.1, rng));
  return {in, out, std::move(weight), std::move(bias)};
}

ModelDescriptor convnet_descriptor(InputShape input, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelDescriptor d;
  d.name = "convnet";
  d.input_shape = input;
  d.layers.push_back(conv_layer(input.channels, 16, rng));
  d.layers.push_back(make_relu<double>());
  d.layers.push_back(make_maxpool2d<double>(Pool2dSpec{{2, 2}, {2, 2}, {0, 0}, {1, 1}}));
  d.layers.push_back(conv_layer(16, 32, rng));
  d.layers.push_back(make_relu<double>());
  d.layers.push_back(make_flatten<double>(1));
  return d;
}

ModelDescriptor vgg16_descriptor(InputShape input, std::uint64_t seed, std::size_t width_divisor,
                                 std::size_t classes) {
  constexpr std::size_t kPool = 0;
  constexpr std::size_t kConfig[] = {64,  64,  kPool, 128, 128, kPool, 256, 256, 256, kPool,
                                     512, 512, 512,   kPool, 512, 512, 512, kPool};
  std::mt19937_64 rng(seed);
  ModelDescriptor d;
  d.name = "vgg16";
  d.input_shape = input;
  std::size_t channels = input.channels;
  for (std::size_t width : kConfig) {
    if (width == kPool) {
      d.layers.push_back(make_maxpool2d<double>(Pool2dSpec{{2, 2}, {2, 2}, {0, 0}, {1, 1}}));
      continue;
    }
    const std::size_t out = std::max<std::size_t>(1, width / width_divisor);
    d.layers.push_back(conv_layer(channels, out, rng));
    d.layers.push_back(make_relu<double>());
    channels = out;
  }
  const std::size_t hidden = std::max<std::size_t>(1, 256 / width_divisor);
  d.layers.push_back(make_adaptive_avgpool2d<double>({1, 1}));
  d.layers.push_back(make_flatten<double>(1));
  d.layers.push_back(make_linear(random_linear_spec(channels, hidden, true, rng)));
  d.layers.push_back(make_relu<double>());
  d.layers.push_back(make_linear(random_linear_spec(hidden, classes, true, rng)));
  return d;
}

}  // namespace swapnet
