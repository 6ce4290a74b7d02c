#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "swapnet/layer.hpp"
#include "swapnet/registry.hpp"

namespace swapnet {

// Declared input template (N, C, H, W); an empty batch means "*" (any N).
struct InputShape {
  std::optional<std::size_t> batch;
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  // Shape with the batch filled in; `symbolic_batch` is used when N is "*".
  Shape with_batch(std::size_t symbolic_batch = 1) const {
    return {batch.value_or(symbolic_batch), channels, height, width};
  }
  bool accepts(const Shape& shape) const {
    return shape.size() == 4 && (!batch || shape[0] == *batch) && shape[1] == channels && shape[2] == height &&
           shape[3] == width;
  }

  friend bool operator==(const InputShape&, const InputShape&) = default;
};

struct ModelDescriptor {
  std::string name;
  InputShape input_shape;
  std::vector<Layer<double>> layers;

  friend bool operator==(const ModelDescriptor&, const ModelDescriptor&) = default;
};

/// Parses a model document (UTF-8 JSON):
///
///   {"name": str, "input_shape": [N | "*", C, H, W], "layers": [...]}
///
/// Layer objects are keyed by "type" (conv2d, linear, relu, maxpool2d,
/// avgpool2d, adaptiveavgpool2d, flatten). Weights are flat row-major arrays.
/// Throws SchemaError naming the offending layer index for malformed fields,
/// weight length mismatches and broken shape chains.
ModelDescriptor load_model(std::string_view document);
ModelDescriptor load_model_file(const std::filesystem::path& path);

// Inverse of load_model; load_model(dump_model(d)) == d.
std::string dump_model(const ModelDescriptor& desc);

/// Static per-layer input shapes followed by the final output shape
/// (layers.size() + 1 entries). A symbolic batch is propagated as
/// `symbolic_batch`.
std::vector<Shape> propagate_shapes(const ModelDescriptor& desc, std::size_t symbolic_batch = 1);

template <typename T>
struct BoundLayer {
  Layer<T> layer;  // layer.algorithm holds the concrete implementation name
  LayerFn<T> impl;
};

/// Executable sequential network. Every layer carries the implementation it
/// was bound to at swap time; forward() only calls through those bindings.
/// Safe for concurrent forward() calls once built.
template <typename T>
class Model {
 public:
  Model(std::string name, InputShape input_shape, std::vector<BoundLayer<T>> layers)
      : name_(std::move(name)), input_shape_(input_shape), layers_(std::move(layers)) {}

  Tensor<T> forward(const Tensor<T>& input) const;

  const std::string& name() const noexcept { return name_; }
  const InputShape& input_shape() const noexcept { return input_shape_; }
  const std::vector<BoundLayer<T>>& layers() const noexcept { return layers_; }
  std::size_t size() const noexcept { return layers_.size(); }
  static constexpr Precision precision() { return precision_of<T>(); }

  // Concrete algorithm name per layer, in layer order.
  std::vector<std::string> assignments() const;

  void rebind(std::size_t index, std::string algorithm, LayerFn<T> impl);

 private:
  std::string name_;
  InputShape input_shape_;
  std::vector<BoundLayer<T>> layers_;
};

}  // namespace swapnet
