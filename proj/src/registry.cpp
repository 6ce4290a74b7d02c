#include "swapnet/registry.hpp"

#include <algorithm>

namespace swapnet {

namespace {
constexpr std::string_view kKeywords[] = {"auto", "custom", "default", "keep"};
}

bool is_reserved_name(std::string_view name) {
  if (parse_conv_algo(name)) return true;
  return std::find(std::begin(kKeywords), std::end(kKeywords), name) != std::end(kKeywords);
}

void AlgorithmRegistry::register_algorithm(RegistryEntry entry) {
  if (frozen_) throw RegistrationError("registry is frozen; cannot register '" + entry.name + "'");
  if (entry.name.empty()) throw RegistrationError("algorithm name must be non-empty");
  if (is_reserved_name(entry.name)) {
    throw RegistrationError("'" + entry.name + "' is a reserved algorithm name");
  }
  if (find(entry.op, entry.name)) {
    throw RegistrationError("algorithm '" + entry.name + "' already registered for " +
                            std::string(to_string(entry.op)));
  }
  if (!entry.f32 || !entry.f64) {
    throw RegistrationError("algorithm '" + entry.name + "' needs both f32 and f64 implementations");
  }
  if (entry.use_as_default && default_entry(entry.op)) {
    throw RegistrationError("a default custom algorithm is already registered for " +
                            std::string(to_string(entry.op)));
  }
  entries_.push_back(std::move(entry));
}

const RegistryEntry* AlgorithmRegistry::find(OpType op, std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.op == op && e.name == name) return &e;
  }
  return nullptr;
}

bool AlgorithmRegistry::has_name(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const RegistryEntry& e) { return e.name == name; });
}

const RegistryEntry& AlgorithmRegistry::custom(OpType op) const {
  const RegistryEntry* found = nullptr;
  for (const auto& e : entries_) {
    if (e.op != op) continue;
    if (found) {
      throw AmbiguousCustom("\"custom\" is ambiguous for " + std::string(to_string(op)) + ": both '" + found->name +
                            "' and '" + e.name + "' are registered; select one by name");
    }
    found = &e;
  }
  if (!found) throw UnknownAlgorithm("\"custom\" requested but no custom " + std::string(to_string(op)) +
                                     " algorithm is registered");
  return *found;
}

const RegistryEntry* AlgorithmRegistry::default_entry(OpType op) const {
  for (const auto& e : entries_) {
    if (e.op == op && e.use_as_default) return &e;
  }
  return nullptr;
}

std::vector<std::string> AlgorithmRegistry::names(OpType op) const {
  std::vector<std::string> out;
  for (const auto& e : entries_) {
    if (e.op == op) out.push_back(e.name);
  }
  return out;
}

AlgorithmRegistry& AlgorithmRegistry::global() {
  static AlgorithmRegistry registry;
  return registry;
}

template <typename T>
LayerFn<T> lookup_algorithm(const AlgorithmRegistry& registry, OpType op, std::string_view name) {
  if (auto algo = parse_conv_algo(name)) {
    if (op != OpType::conv2d && *algo != ConvAlgo::direct) {
      throw UnsupportedConfiguration("algorithm '" + std::string(name) + "' only implements conv2d, not " +
                                     std::string(to_string(op)));
    }
    const ConvAlgo a = *algo;
    return [a](const Tensor<T>& x, const Layer<T>& layer) { return run_builtin(layer, x, a); };
  }
  if (name == "custom") return registry.custom(op).impl<T>();
  if (const RegistryEntry* e = registry.find(op, name)) return e->impl<T>();
  if (registry.has_name(name)) {
    throw UnsupportedConfiguration("algorithm '" + std::string(name) + "' is not registered for " +
                                   std::string(to_string(op)));
  }
  throw UnknownAlgorithm("unknown algorithm '" + std::string(name) + "' for " + std::string(to_string(op)));
}

template LayerFn<float> lookup_algorithm<float>(const AlgorithmRegistry&, OpType, std::string_view);
template LayerFn<double> lookup_algorithm<double>(const AlgorithmRegistry&, OpType, std::string_view);

}  // namespace swapnet
