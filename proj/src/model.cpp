#include "swapnet/model.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace swapnet {

namespace {

using json = nlohmann::json;

class LayerReader {
 public:
  LayerReader(const json& obj, std::size_t index) : obj_(obj), index_(index) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw SchemaError("layer " + std::to_string(index_) + ": " + what);
  }

  const json& field(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) fail(std::string("missing field '") + key + "'");
    return *it;
  }

  bool has(const char* key) const { return obj_.contains(key); }

  std::size_t count(const char* key, std::size_t minimum = 1) {
    const json& v = field(key);
    if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(minimum)) {
      fail(std::string("'") + key + "' must be an integer >= " + std::to_string(minimum));
    }
    return v.get<std::size_t>();
  }

  // [a, b] pair, or a single integer applied to both axes.
  Extent2 pair(const char* key, std::size_t minimum, std::optional<Extent2> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      fail(std::string("missing field '") + key + "'");
    }
    const json& v = field(key);
    auto as_count = [&](const json& e) {
      if (!e.is_number_integer() || e.get<long long>() < static_cast<long long>(minimum)) {
        fail(std::string("'") + key + "' entries must be integers >= " + std::to_string(minimum));
      }
      return e.get<std::size_t>();
    };
    if (v.is_number()) {
      const std::size_t x = as_count(v);
      return {x, x};
    }
    if (!v.is_array() || v.size() != 2) fail(std::string("'") + key + "' must be a two-element array");
    return {as_count(v[0]), as_count(v[1])};
  }

  Tensor<double> weights(const char* key, Shape shape) {
    const json& v = field(key);
    return array_tensor(v, key, std::move(shape));
  }

  std::optional<Tensor<double>> optional_weights(const char* key, Shape shape) {
    if (!has(key)) return std::nullopt;
    const json& v = field(key);
    if (v.is_null()) return std::nullopt;
    return array_tensor(v, key, std::move(shape));
  }

  std::string algorithm() {
    if (!has("algorithm")) return "default";
    const json& v = field("algorithm");
    if (!v.is_string() || v.get<std::string>().empty()) fail("'algorithm' must be a non-empty string");
    return v.get<std::string>();
  }

  void reject_unknown_fields() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (it.key() != "type" && !seen_.count(it.key())) fail("unexpected field '" + it.key() + "'");
    }
  }

 private:
  Tensor<double> array_tensor(const json& v, const char* key, Shape shape) {
    if (!v.is_array()) fail(std::string("'") + key + "' must be an array of numbers");
    const std::size_t expected = element_count(shape);
    if (v.size() != expected) {
      fail(std::string("'") + key + "' has " + std::to_string(v.size()) + " values, expected " +
           std::to_string(expected) + " for shape " + to_string(shape));
    }
    std::vector<double> data;
    data.reserve(v.size());
    for (const json& e : v) {
      if (!e.is_number()) fail(std::string("'") + key + "' must contain only numbers");
      data.push_back(e.get<double>());
    }
    return Tensor<double>(std::move(shape), std::move(data));
  }

  const json& obj_;
  std::size_t index_;
  std::set<std::string> seen_;
};

Layer<double> read_layer(const json& obj, std::size_t index) {
  if (!obj.is_object()) throw SchemaError("layer " + std::to_string(index) + ": must be an object");
  auto type_it = obj.find("type");
  if (type_it == obj.end() || !type_it->is_string()) {
    throw SchemaError("layer " + std::to_string(index) + ": missing string field 'type'");
  }
  const auto op = parse_op_type(type_it->get<std::string>());
  if (!op) {
    throw SchemaError("layer " + std::to_string(index) + ": unknown type '" + type_it->get<std::string>() + "'");
  }

  LayerReader r(obj, index);
  Layer<double> layer;
  layer.op = *op;
  switch (*op) {
    case OpType::conv2d: {
      ConvParams p;
      p.in_channels = r.count("in_channels");
      p.out_channels = r.count("out_channels");
      p.kernel = r.pair("kernel", 1);
      p.stride = r.pair("stride", 1, Extent2{1, 1});
      p.padding = r.pair("padding", 0, Extent2{0, 0});
      p.dilation = r.pair("dilation", 1, Extent2{1, 1});
      auto weight = r.weights("weight", {p.out_channels, p.in_channels, p.kernel.h, p.kernel.w});
      auto bias = r.optional_weights("bias", {p.out_channels});
      layer.spec = Conv2dSpec<double>{p, std::move(weight), std::move(bias)};
      layer.algorithm = r.algorithm();
      break;
    }
    case OpType::linear: {
      const std::size_t in = r.count("in_features");
      const std::size_t out = r.count("out_features");
      auto weight = r.weights("weight", {out, in});
      auto bias = r.optional_weights("bias", {out});
      layer.spec = LinearSpec<double>{in, out, std::move(weight), std::move(bias)};
      layer.algorithm = r.algorithm();
      break;
    }
    case OpType::relu:
      layer.spec = ReluSpec{};
      layer.algorithm = r.algorithm();
      break;
    case OpType::maxpool2d:
    case OpType::avgpool2d: {
      Pool2dSpec s;
      s.kernel = r.pair("kernel", 1);
      s.stride = r.pair("stride", 1, s.kernel);
      s.padding = r.pair("padding", 0, Extent2{0, 0});
      s.dilation = r.pair("dilation", 1, Extent2{1, 1});
      layer.spec = s;
      layer.algorithm = r.algorithm();
      break;
    }
    case OpType::adaptiveavgpool2d:
      layer.spec = AdaptivePoolSpec{r.pair("output_size", 1)};
      layer.algorithm = r.algorithm();
      break;
    case OpType::flatten:
      layer.spec = FlattenSpec{r.has("start_dim") ? r.count("start_dim", 0) : 1};
      layer.algorithm = r.algorithm();
      break;
  }
  r.reject_unknown_fields();
  try {
    validate(layer);
  } catch (const ShapeError& e) {
    r.fail(e.what());
  }
  return layer;
}

json pair_json(Extent2 e) { return json::array({e.h, e.w}); }

json tensor_json(const Tensor<double>& t) { return json(t.values()); }

json optional_tensor_json(const std::optional<Tensor<double>>& t) { return t ? tensor_json(*t) : json(nullptr); }

json layer_json(const Layer<double>& layer) {
  json obj = {{"type", std::string(to_string(layer.op))}};
  std::visit(
      [&](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Conv2dSpec<double>>) {
          obj["in_channels"] = s.params.in_channels;
          obj["out_channels"] = s.params.out_channels;
          obj["kernel"] = pair_json(s.params.kernel);
          obj["stride"] = pair_json(s.params.stride);
          obj["padding"] = pair_json(s.params.padding);
          obj["dilation"] = pair_json(s.params.dilation);
          obj["weight"] = tensor_json(s.weight);
          obj["bias"] = optional_tensor_json(s.bias);
        } else if constexpr (std::is_same_v<S, LinearSpec<double>>) {
          obj["in_features"] = s.in_features;
          obj["out_features"] = s.out_features;
          obj["weight"] = tensor_json(s.weight);
          obj["bias"] = optional_tensor_json(s.bias);
        } else if constexpr (std::is_same_v<S, Pool2dSpec>) {
          obj["kernel"] = pair_json(s.kernel);
          obj["stride"] = pair_json(s.stride);
          obj["padding"] = pair_json(s.padding);
          obj["dilation"] = pair_json(s.dilation);
        } else if constexpr (std::is_same_v<S, AdaptivePoolSpec>) {
          obj["output_size"] = pair_json(s.output_size);
        } else if constexpr (std::is_same_v<S, FlattenSpec>) {
          obj["start_dim"] = s.start_dim;
        }
      },
      layer.spec);
  if (layer.algorithm != "default") obj["algorithm"] = layer.algorithm;
  return obj;
}

InputShape read_input_shape(const json& v) {
  if (!v.is_array() || v.size() != 4) throw SchemaError("'input_shape' must be [N|\"*\", C, H, W]");
  InputShape s;
  if (v[0].is_string()) {
    if (v[0].get<std::string>() != "*") throw SchemaError("'input_shape' batch must be an integer or \"*\"");
  } else if (v[0].is_number_integer() && v[0].get<long long>() >= 1) {
    s.batch = v[0].get<std::size_t>();
  } else {
    throw SchemaError("'input_shape' batch must be an integer >= 1 or \"*\"");
  }
  std::size_t dims[3];
  for (std::size_t i = 0; i < 3; ++i) {
    if (!v[i + 1].is_number_integer() || v[i + 1].get<long long>() < 1) {
      throw SchemaError("'input_shape' C, H, W must be integers >= 1");
    }
    dims[i] = v[i + 1].get<std::size_t>();
  }
  s.channels = dims[0];
  s.height = dims[1];
  s.width = dims[2];
  return s;
}

}  // namespace

std::vector<Shape> propagate_shapes(const ModelDescriptor& desc, std::size_t symbolic_batch) {
  std::vector<Shape> shapes{desc.input_shape.with_batch(symbolic_batch)};
  shapes.reserve(desc.layers.size() + 1);
  for (std::size_t i = 0; i < desc.layers.size(); ++i) {
    try {
      shapes.push_back(layer_output_shape(desc.layers[i], shapes.back()));
    } catch (const ShapeError& e) {
      throw SchemaError("layer " + std::to_string(i) + " (" + std::string(to_string(desc.layers[i].op)) +
                        "): " + e.what());
    }
  }
  return shapes;
}

ModelDescriptor load_model(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("model document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("model document must be a JSON object");
  for (const char* key : {"name", "input_shape", "layers"}) {
    if (!doc.contains(key)) throw SchemaError(std::string("model document missing '") + key + "'");
  }
  if (!doc["name"].is_string()) throw SchemaError("'name' must be a string");
  if (!doc["layers"].is_array()) throw SchemaError("'layers' must be an array");

  ModelDescriptor desc;
  desc.name = doc["name"].get<std::string>();
  desc.input_shape = read_input_shape(doc["input_shape"]);
  const json& layers = doc["layers"];
  for (std::size_t i = 0; i < layers.size(); ++i) desc.layers.push_back(read_layer(layers[i], i));
  propagate_shapes(desc);
  return desc;
}

ModelDescriptor load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}

std::string dump_model(const ModelDescriptor& desc) {
  json in_shape = json::array();
  if (desc.input_shape.batch) {
    in_shape.push_back(*desc.input_shape.batch);
  } else {
    in_shape.push_back("*");
  }
  in_shape.push_back(desc.input_shape.channels);
  in_shape.push_back(desc.input_shape.height);
  in_shape.push_back(desc.input_shape.width);
  json layers = json::array();
  for (const auto& l : desc.layers) layers.push_back(layer_json(l));
  json doc = {{"name", desc.name}, {"input_shape", in_shape}, {"layers", layers}};
  return doc.dump(1);
}

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T>& input) const {
  if (!input_shape_.accepts(input.shape())) {
    throw ShapeError("model '" + name_ + "' expects input " + to_string(input_shape_.with_batch(input.shape()[0])) +
                     ", got " + to_string(input.shape()));
  }
  if (layers_.empty()) return input;
  Tensor<T> x = layers_.front().impl(input, layers_.front().layer);
  for (std::size_t i = 1; i < layers_.size(); ++i) x = layers_[i].impl(x, layers_[i].layer);
  return x;
}

template <typename T>
std::vector<std::string> Model<T>::assignments() const {
  std::vector<std::string> out;
  out.reserve(layers_.size());
  for (const auto& l : layers_) out.push_back(l.layer.algorithm);
  return out;
}

template <typename T>
void Model<T>::rebind(std::size_t index, std::string algorithm, LayerFn<T> impl) {
  BoundLayer<T>& l = layers_.at(index);
  l.layer.algorithm = std::move(algorithm);
  l.impl = std::move(impl);
}

template class Model<float>;
template class Model<double>;

}  // namespace swapnet
