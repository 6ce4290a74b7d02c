#include "swapnet/layer.hpp"

namespace swapnet {

std::string_view to_string(OpType op) {
  switch (op) {
    case OpType::conv2d: return "conv2d";
    case OpType::linear: return "linear";
    case OpType::relu: return "relu";
    case OpType::maxpool2d: return "maxpool2d";
    case OpType::avgpool2d: return "avgpool2d";
    case OpType::adaptiveavgpool2d: return "adaptiveavgpool2d";
    case OpType::flatten: return "flatten";
  }
  return "?";
}

std::optional<OpType> parse_op_type(std::string_view name) {
  for (OpType op : kOpTypes) {
    if (to_string(op) == name) return op;
  }
  return std::nullopt;
}

namespace {

template <typename S, typename T>
const S& spec_as(const Layer<T>& layer) {
  if (const S* s = std::get_if<S>(&layer.spec)) return *s;
  throw SchemaError("layer spec does not match op type " + std::string(to_string(layer.op)));
}

}  // namespace

template <typename T>
void validate(const Layer<T>& layer) {
  switch (layer.op) {
    case OpType::conv2d: validate(spec_as<Conv2dSpec<T>>(layer)); break;
    case OpType::linear: validate(spec_as<LinearSpec<T>>(layer)); break;
    case OpType::relu: spec_as<ReluSpec>(layer); break;
    case OpType::maxpool2d: validate_pool(spec_as<Pool2dSpec>(layer), false); break;
    case OpType::avgpool2d: validate_pool(spec_as<Pool2dSpec>(layer), true); break;
    case OpType::adaptiveavgpool2d: {
      const auto& s = spec_as<AdaptivePoolSpec>(layer);
      if (s.output_size.h == 0 || s.output_size.w == 0) throw ShapeError("adaptive output size must be >= 1");
      break;
    }
    case OpType::flatten: spec_as<FlattenSpec>(layer); break;
  }
}

template <typename T>
Shape layer_output_shape(const Layer<T>& layer, const Shape& in) {
  switch (layer.op) {
    case OpType::conv2d: return conv2d_output_shape(spec_as<Conv2dSpec<T>>(layer).params, in);
    case OpType::linear: {
      const auto& s = spec_as<LinearSpec<T>>(layer);
      return linear_output_shape(s.in_features, s.out_features, in);
    }
    case OpType::relu: return in;
    case OpType::maxpool2d: return pool2d_output_shape(spec_as<Pool2dSpec>(layer), in, false);
    case OpType::avgpool2d: return pool2d_output_shape(spec_as<Pool2dSpec>(layer), in, true);
    case OpType::adaptiveavgpool2d:
      return adaptive_avgpool2d_output_shape(spec_as<AdaptivePoolSpec>(layer).output_size, in);
    case OpType::flatten: return flatten_output_shape(spec_as<FlattenSpec>(layer).start_dim, in);
  }
  throw SchemaError("unhandled op type");
}

template <typename T>
Tensor<T> run_builtin(const Layer<T>& layer, const Tensor<T>& input, ConvAlgo conv_algo) {
  switch (layer.op) {
    case OpType::conv2d: return conv2d(input, spec_as<Conv2dSpec<T>>(layer), conv_algo);
    case OpType::linear: return linear(input, spec_as<LinearSpec<T>>(layer));
    case OpType::relu: return relu(input);
    case OpType::maxpool2d: return maxpool2d(input, spec_as<Pool2dSpec>(layer));
    case OpType::avgpool2d: return avgpool2d(input, spec_as<Pool2dSpec>(layer));
    case OpType::adaptiveavgpool2d:
      return adaptive_avgpool2d(input, spec_as<AdaptivePoolSpec>(layer).output_size);
    case OpType::flatten: return flatten(input, spec_as<FlattenSpec>(layer).start_dim);
  }
  throw SchemaError("unhandled op type");
}

#define SWAPNET_INSTANTIATE(T)                                                    \
  template void validate<T>(const Layer<T>&);                                     \
  template Shape layer_output_shape<T>(const Layer<T>&, const Shape&);            \
  template Tensor<T> run_builtin<T>(const Layer<T>&, const Tensor<T>&, ConvAlgo);

SWAPNET_INSTANTIATE(float)
SWAPNET_INSTANTIATE(double)
#undef SWAPNET_INSTANTIATE

}  // namespace swapnet
