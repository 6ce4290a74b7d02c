#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "swapnet/model.hpp"
#include "swapnet/registry.hpp"

namespace swapnet {

struct LinearShape {
  std::size_t in_features = 1;
  std::size_t out_features = 1;
  friend bool operator==(const LinearShape&, const LinearShape&) = default;
};

using Hyperparameters = std::variant<ReluSpec, ConvParams, LinearShape, Pool2dSpec, AdaptivePoolSpec, FlattenSpec>;

// What a selector sees about the layer it is choosing for.
struct LayerMeta {
  OpType op = OpType::conv2d;
  std::size_t occurrence_index = 0;  // among layers of the same op type
  std::size_t layer_index = 0;       // position in the model
  Hyperparameters hyperparameters = ReluSpec{};
  std::optional<Shape> input_shape;

  const ConvParams* conv() const { return std::get_if<ConvParams>(&hyperparameters); }
};

template <typename T>
Hyperparameters hyperparameters_of(const Layer<T>& layer);

using RuleFn = std::function<std::string(const LayerMeta&)>;

/// Chooses an algorithm name per layer: a fixed name for every layer of the
/// type, a list indexed by occurrence (layers past its end get "default"), or
/// a rule evaluated on the layer's metadata.
class AlgorithmSelector {
 public:
  AlgorithmSelector(const char* name) : AlgorithmSelector(fixed(name)) {}
  AlgorithmSelector(std::string name) : AlgorithmSelector(fixed(std::move(name))) {}

  static AlgorithmSelector fixed(std::string name);
  static AlgorithmSelector sequence(std::vector<std::string> names);
  static AlgorithmSelector rule(RuleFn fn);

  const std::variant<std::string, std::vector<std::string>, RuleFn>& choice() const noexcept { return choice_; }

 private:
  explicit AlgorithmSelector(std::variant<std::string, std::vector<std::string>, RuleFn> choice)
      : choice_(std::move(choice)) {}

  std::variant<std::string, std::vector<std::string>, RuleFn> choice_;
};

using SelectorMap = std::map<OpType, AlgorithmSelector>;

// Whether `name` may appear as a selector result for `op`: a built-in, a
// registered name, or one of "default", "custom", "keep", "auto".
bool is_known_algorithm_name(const AlgorithmRegistry& registry, OpType op, std::string_view name);

/// Algorithm name the selector picks for `meta`. The result may still be a
/// keyword ("default", "custom", "keep", "auto"); binding it to an
/// implementation happens in swap_backend / swap_operation.
/// Throws UnknownAlgorithm when the name is not known to `registry`.
std::string resolve_selector(const AlgorithmSelector& sel, const LayerMeta& meta,
                             const AlgorithmRegistry& registry = AlgorithmRegistry::global());

/// Builds a Model from a descriptor, binding every layer to an
/// implementation. Layers whose op type is absent from `selectors` use the
/// descriptor's own algorithm field ("default" unless the file says
/// otherwise).
///
/// Throws UnsupportedConfiguration (naming the layer index) when a resolved
/// algorithm cannot run that layer, UnknownAlgorithm for unknown names.
template <typename T>
Model<T> swap_backend(const ModelDescriptor& desc, const SelectorMap& selectors = {},
                      const AlgorithmRegistry& registry = AlgorithmRegistry::global());

/// Re-binds every layer of type `op` in place; other layers are untouched.
/// A resolved "keep" leaves the layer's current binding as is.
template <typename T>
Model<T>& swap_operation(Model<T>& model, OpType op, const AlgorithmSelector& sel,
                         const AlgorithmRegistry& registry = AlgorithmRegistry::global());

/// Parses the rule mini-language used on the command line, e.g.
///   in_channels>200:smm;*:direct
/// Clauses are separated by ';' or newlines and tried in order; the first
/// whose condition holds gives the algorithm. A condition is '*' or
/// comparisons joined by '&', each `field OP integer` with OP one of
/// > >= < <= == != and field one of in_channels, out_channels, kernel_h,
/// kernel_w, stride_h, stride_w, padding_h, padding_w, dilation_h,
/// dilation_w, height, width, batch, occurrence. Conv fields evaluate false on
/// other layer types. No matching clause yields "default".
AlgorithmSelector parse_rule(std::string_view text);

/// CLI selector syntax: text containing ':' is a rule, a comma-separated list
/// with more than one entry is a sequence, anything else a fixed name.
AlgorithmSelector parse_selector(std::string_view text);

}  // namespace swapnet
