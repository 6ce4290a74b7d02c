#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "swapnet/layer.hpp"

namespace swapnet {

// Implementation of one layer: (input, layer) -> output.
template <typename T>
using LayerFn = std::function<Tensor<T>(const Tensor<T>&, const Layer<T>&)>;

// Names the registry refuses: built-in algorithms and the resolution keywords.
bool is_reserved_name(std::string_view name);

struct RegistryEntry {
  OpType op = OpType::conv2d;
  std::string name;
  LayerFn<float> f32;
  LayerFn<double> f64;
  bool use_as_default = false;

  template <typename T>
  const LayerFn<T>& impl() const {
    if constexpr (std::is_same_v<T, float>) {
      return f32;
    } else {
      return f64;
    }
  }

  // Builds a conv2d entry from a callable generic over precision:
  // fn(const Tensor<T>&, const Conv2dSpec<T>&) -> Tensor<T>.
  template <typename F>
  static RegistryEntry conv2d(std::string name, F fn, bool use_as_default = false) {
    RegistryEntry e;
    e.op = OpType::conv2d;
    e.name = std::move(name);
    e.f32 = [fn](const Tensor<float>& x, const Layer<float>& l) { return fn(x, std::get<Conv2dSpec<float>>(l.spec)); };
    e.f64 = [fn](const Tensor<double>& x, const Layer<double>& l) {
      return fn(x, std::get<Conv2dSpec<double>>(l.spec));
    };
    e.use_as_default = use_as_default;
    return e;
  }
};

/// User-registered algorithms keyed by (op type, name).
///
/// Registration is a setup phase: once freeze() is called (or the registry is
/// shared between threads) only the const lookups may be used. Models copy the
/// implementations they need at swap time, so later registry changes never
/// reach an already-built model.
class AlgorithmRegistry {
 public:
  // Throws RegistrationError for reserved or duplicate names, missing
  // callables, or when frozen.
  void register_algorithm(RegistryEntry entry);

  void freeze() noexcept { frozen_ = true; }
  bool frozen() const noexcept { return frozen_; }

  const RegistryEntry* find(OpType op, std::string_view name) const;
  // Whether `name` is registered for any op type.
  bool has_name(std::string_view name) const;

  /// The single entry "custom" refers to for `op`. Throws UnknownAlgorithm
  /// when none is registered and AmbiguousCustom when several are.
  const RegistryEntry& custom(OpType op) const;

  // Entry flagged use_as_default for `op`, or nullptr.
  const RegistryEntry* default_entry(OpType op) const;

  std::vector<std::string> names(OpType op) const;

  static AlgorithmRegistry& global();

 private:
  std::vector<RegistryEntry> entries_;
  bool frozen_ = false;
};

/// Implementation for a concrete algorithm name. Built-in names resolve to
/// the built-ins regardless of registry contents; "custom" resolves through
/// AlgorithmRegistry::custom; anything else must be registered for `op`.
template <typename T>
LayerFn<T> lookup_algorithm(const AlgorithmRegistry& registry, OpType op, std::string_view name);

}  // namespace swapnet
