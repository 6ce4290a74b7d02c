#include "swapnet/selection.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace swapnet {

AlgorithmSelector AlgorithmSelector::fixed(std::string name) {
  if (name.empty()) throw Error("selector algorithm name must be non-empty");
  return AlgorithmSelector(std::variant<std::string, std::vector<std::string>, RuleFn>(std::move(name)));
}

AlgorithmSelector AlgorithmSelector::sequence(std::vector<std::string> names) {
  for (const auto& n : names) {
    if (n.empty()) throw Error("selector sequence entries must be non-empty");
  }
  return AlgorithmSelector(std::variant<std::string, std::vector<std::string>, RuleFn>(std::move(names)));
}

AlgorithmSelector AlgorithmSelector::rule(RuleFn fn) {
  if (!fn) throw Error("selector rule must be callable");
  return AlgorithmSelector(std::variant<std::string, std::vector<std::string>, RuleFn>(std::move(fn)));
}

template <typename T>
Hyperparameters hyperparameters_of(const Layer<T>& layer) {
  return std::visit(
      [](const auto& s) -> Hyperparameters {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Conv2dSpec<T>>) {
          return s.params;
        } else if constexpr (std::is_same_v<S, LinearSpec<T>>) {
          return LinearShape{s.in_features, s.out_features};
        } else {
          return s;
        }
      },
      layer.spec);
}

bool is_known_algorithm_name(const AlgorithmRegistry& registry, OpType /*op*/, std::string_view name) {
  return is_reserved_name(name) || registry.has_name(name);
}

std::string resolve_selector(const AlgorithmSelector& sel, const LayerMeta& meta, const AlgorithmRegistry& registry) {
  std::string name = std::visit(
      [&](const auto& c) -> std::string {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, std::string>) {
          return c;
        } else if constexpr (std::is_same_v<C, std::vector<std::string>>) {
          return meta.occurrence_index < c.size() ? c[meta.occurrence_index] : std::string("default");
        } else {
          return c(meta);
        }
      },
      sel.choice());
  if (!is_known_algorithm_name(registry, meta.op, name)) {
    throw UnknownAlgorithm("layer " + std::to_string(meta.layer_index) + " (" + std::string(to_string(meta.op)) +
                           "): unknown algorithm '" + name + "'");
  }
  return name;
}

namespace {

template <typename T>
struct Binding {
  std::string name;
  LayerFn<T> impl;
};

template <typename T>
std::vector<LayerMeta> build_metas(const std::vector<const Layer<T>*>& layers, const InputShape& input) {
  std::vector<LayerMeta> metas;
  metas.reserve(layers.size());
  std::map<OpType, std::size_t> seen;
  Shape shape = input.with_batch();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer<T>& l = *layers[i];
    LayerMeta m;
    m.op = l.op;
    m.occurrence_index = seen[l.op]++;
    m.layer_index = i;
    m.hyperparameters = hyperparameters_of(l);
    m.input_shape = shape;
    metas.push_back(std::move(m));
    shape = layer_output_shape(l, shape);
  }
  return metas;
}

std::string context(const LayerMeta& meta) {
  return "layer " + std::to_string(meta.layer_index) + " (" + std::string(to_string(meta.op)) + "): ";
}

template <typename T>
Binding<T> bind_unchecked(std::string requested, const LayerMeta& meta, const AlgorithmRegistry& registry) {
  if (requested == "default") {
    if (const RegistryEntry* e = registry.default_entry(meta.op)) return {e->name, e->impl<T>()};
    requested = meta.op == OpType::conv2d ? "auto" : "direct";
  }
  if (requested == "auto") {
    if (!meta.conv()) throw UnsupportedConfiguration("'auto' only applies to conv2d");
    requested = std::string(to_string(conv2d_auto(*meta.input_shape, *meta.conv())));
  }
  if (requested == "custom") {
    const RegistryEntry& e = registry.custom(meta.op);
    return {e.name, e.impl<T>()};
  }
  if (requested == "keep") throw UnsupportedConfiguration("'keep' has no binding to keep");
  if (auto algo = parse_conv_algo(requested); algo && meta.conv()) {
    if (auto reason = unsupported_reason(*algo, *meta.conv())) throw UnsupportedConfiguration(*reason);
  }
  LayerFn<T> impl = lookup_algorithm<T>(registry, meta.op, requested);
  return {std::move(requested), std::move(impl)};
}

// Binds a requested name to an implementation, prefixing errors with the
// layer they concern.
template <typename T>
Binding<T> bind(std::string requested, const LayerMeta& meta, const AlgorithmRegistry& registry) {
  try {
    return bind_unchecked<T>(std::move(requested), meta, registry);
  } catch (const UnsupportedConfiguration& e) {
    throw UnsupportedConfiguration(context(meta) + e.what());
  } catch (const AmbiguousCustom& e) {
    throw AmbiguousCustom(context(meta) + e.what());
  } catch (const UnknownAlgorithm& e) {
    throw UnknownAlgorithm(context(meta) + e.what());
  }
}

}  // namespace

template <typename T>
Model<T> swap_backend(const ModelDescriptor& desc, const SelectorMap& selectors, const AlgorithmRegistry& registry) {
  propagate_shapes(desc);
  std::vector<Layer<T>> layers;
  layers.reserve(desc.layers.size());
  for (const auto& l : desc.layers) layers.push_back(l.template cast<T>());
  std::vector<const Layer<T>*> views;
  for (const auto& l : layers) views.push_back(&l);
  const std::vector<LayerMeta> metas = build_metas(views, desc.input_shape);

  std::vector<BoundLayer<T>> bound;
  bound.reserve(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    std::string requested = layers[i].algorithm;
    if (auto it = selectors.find(layers[i].op); it != selectors.end()) {
      requested = resolve_selector(it->second, metas[i], registry);
      if (requested == "keep") requested = layers[i].algorithm;
    }
    if (requested == "keep") requested = "default";
    Binding<T> b = bind<T>(std::move(requested), metas[i], registry);
    Layer<T> layer = std::move(layers[i]);
    layer.algorithm = std::move(b.name);
    bound.push_back(BoundLayer<T>{std::move(layer), std::move(b.impl)});
  }
  return Model<T>(desc.name, desc.input_shape, std::move(bound));
}

template <typename T>
Model<T>& swap_operation(Model<T>& model, OpType op, const AlgorithmSelector& sel, const AlgorithmRegistry& registry) {
  std::vector<const Layer<T>*> views;
  for (const auto& b : model.layers()) views.push_back(&b.layer);
  const std::vector<LayerMeta> metas = build_metas(views, model.input_shape());

  // Resolve everything before touching the model so a failure leaves it intact.
  std::vector<std::pair<std::size_t, Binding<T>>> updates;
  for (std::size_t i = 0; i < metas.size(); ++i) {
    if (metas[i].op != op) continue;
    std::string requested = resolve_selector(sel, metas[i], registry);
    if (requested == "keep") continue;
    updates.emplace_back(i, bind<T>(std::move(requested), metas[i], registry));
  }
  for (auto& [index, b] : updates) model.rebind(index, std::move(b.name), std::move(b.impl));
  return model;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

enum class Cmp { gt, ge, lt, le, eq, ne };

struct Comparison {
  std::string field;
  Cmp cmp;
  long long value;
};

std::optional<long long> field_value(const LayerMeta& meta, const std::string& field) {
  if (field == "occurrence") return static_cast<long long>(meta.occurrence_index);
  if (field == "batch" || field == "height" || field == "width") {
    if (!meta.input_shape || meta.input_shape->size() != 4) return std::nullopt;
    const std::size_t axis = field == "batch" ? 0 : field == "height" ? 2 : 3;
    return static_cast<long long>((*meta.input_shape)[axis]);
  }
  if (const auto* lin = std::get_if<LinearShape>(&meta.hyperparameters)) {
    if (field == "in_features") return static_cast<long long>(lin->in_features);
    if (field == "out_features") return static_cast<long long>(lin->out_features);
    return std::nullopt;
  }
  const ConvParams* p = meta.conv();
  if (!p) return std::nullopt;
  const std::pair<const char*, std::size_t> fields[] = {
      {"in_channels", p->in_channels}, {"out_channels", p->out_channels}, {"kernel_h", p->kernel.h},
      {"kernel_w", p->kernel.w},       {"stride_h", p->stride.h},         {"stride_w", p->stride.w},
      {"padding_h", p->padding.h},     {"padding_w", p->padding.w},       {"dilation_h", p->dilation.h},
      {"dilation_w", p->dilation.w}};
  for (const auto& [name, v] : fields) {
    if (field == name) return static_cast<long long>(v);
  }
  return std::nullopt;
}

bool holds(const Comparison& c, const LayerMeta& meta) {
  const auto v = field_value(meta, c.field);
  if (!v) return false;
  switch (c.cmp) {
    case Cmp::gt: return *v > c.value;
    case Cmp::ge: return *v >= c.value;
    case Cmp::lt: return *v < c.value;
    case Cmp::le: return *v <= c.value;
    case Cmp::eq: return *v == c.value;
    case Cmp::ne: return *v != c.value;
  }
  return false;
}

constexpr std::string_view kRuleFields[] = {
    "in_channels", "out_channels", "kernel_h",   "kernel_w",   "stride_h", "stride_w",  "padding_h",     "padding_w",
    "dilation_h",  "dilation_w",   "height",     "width",      "batch",    "occurrence", "in_features", "out_features"};

Comparison parse_comparison(std::string_view text, std::size_t clause) {
  auto fail = [&](const std::string& what) -> Comparison {
    throw Error("rule clause " + std::to_string(clause) + ": " + what);
  };
  text = trim(text);
  std::size_t pos = 0;
  while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_')) ++pos;
  const std::string field(trim(text.substr(0, pos)));
  if (std::find(std::begin(kRuleFields), std::end(kRuleFields), field) == std::end(kRuleFields)) {
    return fail("unknown field '" + field + "'");
  }
  std::string_view rest = trim(text.substr(pos));
  const std::pair<std::string_view, Cmp> ops[] = {{">=", Cmp::ge}, {"<=", Cmp::le}, {"==", Cmp::eq},
                                                  {"!=", Cmp::ne}, {">", Cmp::gt},  {"<", Cmp::lt}};
  for (const auto& [sym, cmp] : ops) {
    if (rest.substr(0, sym.size()) != sym) continue;
    const std::string_view number = trim(rest.substr(sym.size()));
    long long value = 0;
    auto [end, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
    if (ec != std::errc() || end != number.data() + number.size() || number.empty()) {
      return fail("expected an integer after '" + std::string(sym) + "'");
    }
    return Comparison{field, cmp, value};
  }
  return fail("expected a comparison operator after '" + field + "'");
}

}  // namespace

AlgorithmSelector parse_rule(std::string_view text) {
  struct Clause {
    std::vector<Comparison> all;  // empty means '*'
    std::string algorithm;
  };
  std::vector<Clause> clauses;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find_first_of(";\n", start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view raw = trim(text.substr(start, end - start));
    start = end + 1;
    if (raw.empty() || raw.front() == '#') continue;
    const std::size_t colon = raw.rfind(':');
    const std::size_t index = clauses.size();
    if (colon == std::string_view::npos) {
      throw Error("rule clause " + std::to_string(index) + ": expected 'condition:algorithm'");
    }
    Clause c;
    c.algorithm = std::string(trim(raw.substr(colon + 1)));
    if (c.algorithm.empty()) throw Error("rule clause " + std::to_string(index) + ": missing algorithm name");
    const std::string_view cond = trim(raw.substr(0, colon));
    if (cond != "*") {
      std::size_t from = 0;
      while (from <= cond.size()) {
        std::size_t amp = cond.find('&', from);
        if (amp == std::string_view::npos) amp = cond.size();
        c.all.push_back(parse_comparison(cond.substr(from, amp - from), index));
        from = amp + 1;
      }
    }
    clauses.push_back(std::move(c));
  }
  if (clauses.empty()) throw Error("rule has no clauses");
  return AlgorithmSelector::rule([clauses = std::move(clauses)](const LayerMeta& meta) -> std::string {
    for (const auto& c : clauses) {
      if (std::all_of(c.all.begin(), c.all.end(), [&](const Comparison& cmp) { return holds(cmp, meta); })) {
        return c.algorithm;
      }
    }
    return "default";
  });
}

AlgorithmSelector parse_selector(std::string_view text) {
  text = trim(text);
  if (text.find(':') != std::string_view::npos) return parse_rule(text);
  if (text.find(',') != std::string_view::npos) {
    std::vector<std::string> names;
    std::size_t from = 0;
    while (from <= text.size()) {
      std::size_t comma = text.find(',', from);
      if (comma == std::string_view::npos) comma = text.size();
      names.emplace_back(trim(text.substr(from, comma - from)));
      from = comma + 1;
    }
    return AlgorithmSelector::sequence(std::move(names));
  }
  return AlgorithmSelector::fixed(std::string(text));
}

template Hyperparameters hyperparameters_of<float>(const Layer<float>&);
template Hyperparameters hyperparameters_of<double>(const Layer<double>&);
template Model<float> swap_backend<float>(const ModelDescriptor&, const SelectorMap&, const AlgorithmRegistry&);
template Model<double> swap_backend<double>(const ModelDescriptor&, const SelectorMap&, const AlgorithmRegistry&);
template Model<float>& swap_operation<float>(Model<float>&, OpType, const AlgorithmSelector&,
                                             const AlgorithmRegistry&);
template Model<double>& swap_operation<double>(Model<double>&, OpType, const AlgorithmSelector&,
                                               const AlgorithmRegistry&);

}  // namespace swapnet
