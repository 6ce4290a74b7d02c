#include "swapnet/nn_ops.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>

namespace swapnet {

namespace {

using Index = std::int64_t;

void require_rank4(const Shape& s, const char* op) {
  if (s.size() != 4) throw ShapeError(std::string(op) + " expects (N, C, H, W) input, got " + to_string(s));
}

}  // namespace

template <typename T>
void validate(const LinearSpec<T>& spec) {
  if (spec.in_features == 0 || spec.out_features == 0) throw ShapeError("linear feature counts must be >= 1");
  const Shape expected{spec.out_features, spec.in_features};
  if (spec.weight.shape() != expected) {
    throw ShapeError("linear weight shape " + to_string(spec.weight.shape()) + " does not match " +
                     to_string(expected));
  }
  if (spec.bias && spec.bias->shape() != Shape{spec.out_features}) {
    throw ShapeError("linear bias shape " + to_string(spec.bias->shape()) + " does not match (" +
                     std::to_string(spec.out_features) + ")");
  }
}

void validate_pool(const Pool2dSpec& s, bool average) {
  if (s.kernel.h == 0 || s.kernel.w == 0) throw ShapeError("pool kernel extents must be >= 1");
  if (s.stride.h == 0 || s.stride.w == 0) throw ShapeError("pool stride must be >= 1");
  if (s.dilation.h == 0 || s.dilation.w == 0) throw ShapeError("pool dilation must be >= 1");
  if (2 * s.padding.h > s.kernel.h || 2 * s.padding.w > s.kernel.w) {
    throw ShapeError("pool padding must be at most half the kernel size");
  }
  if (average && (s.dilation.h != 1 || s.dilation.w != 1)) {
    throw ShapeError("avgpool2d does not support dilation");
  }
}

Shape pool2d_output_shape(const Pool2dSpec& s, const Shape& in, bool average) {
  validate_pool(s, average);
  require_rank4(in, average ? "avgpool2d" : "maxpool2d");
  const std::size_t eff_h = s.dilation.h * (s.kernel.h - 1) + 1;
  const std::size_t eff_w = s.dilation.w * (s.kernel.w - 1) + 1;
  const std::size_t padded_h = in[2] + 2 * s.padding.h;
  const std::size_t padded_w = in[3] + 2 * s.padding.w;
  if (eff_h > padded_h || eff_w > padded_w) {
    throw ShapeError("pool window " + std::to_string(eff_h) + "x" + std::to_string(eff_w) +
                     " exceeds padded input " + std::to_string(padded_h) + "x" + std::to_string(padded_w));
  }
  const std::size_t hout = (padded_h - eff_h) / s.stride.h + 1;
  const std::size_t wout = (padded_w - eff_w) / s.stride.w + 1;
  if (hout > in[2] || wout > in[3]) {
    throw ShapeError("pooling would enlarge " + std::to_string(in[2]) + "x" + std::to_string(in[3]) + " to " +
                     std::to_string(hout) + "x" + std::to_string(wout) + "; reduce padding or raise stride");
  }
  return {in[0], in[1], hout, wout};
}

Shape linear_output_shape(std::size_t in_features, std::size_t out_features, const Shape& in) {
  if (in.size() != 2 || in[1] != in_features) {
    throw ShapeError("linear expects (N, " + std::to_string(in_features) + ") input, got " + to_string(in));
  }
  return {in[0], out_features};
}

Shape adaptive_avgpool2d_output_shape(Extent2 size, const Shape& in) {
  require_rank4(in, "adaptive_avgpool2d");
  if (size.h == 0 || size.w == 0 || size.h > in[2] || size.w > in[3]) {
    throw ShapeError("adaptive_avgpool2d output size " + std::to_string(size.h) + "x" + std::to_string(size.w) +
                     " invalid for input " + to_string(in));
  }
  return {in[0], in[1], size.h, size.w};
}

Shape flatten_output_shape(std::size_t start_dim, const Shape& in) {
  if (start_dim >= in.size()) {
    throw ShapeError("flatten start_dim " + std::to_string(start_dim) + " out of range for " + to_string(in));
  }
  Shape out(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(start_dim));
  std::size_t tail = 1;
  for (std::size_t a = start_dim; a < in.size(); ++a) tail *= in[a];
  out.push_back(tail);
  return out;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& input, const LinearSpec<T>& spec) {
  validate(spec);
  const Shape out_shape = linear_output_shape(spec.in_features, spec.out_features, input.shape());
  const std::size_t n = out_shape[0], in_f = spec.in_features, out_f = spec.out_features;
  auto out = Tensor<T>::zeros(out_shape);
  T* dst = out.mutable_data().data();
  const T* x = input.data().data();
  const T* w = spec.weight.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t o = 0; o < out_f; ++o) {
      T acc{0};
      for (std::size_t k = 0; k < in_f; ++k) acc += x[i * in_f + k] * w[o * in_f + k];
      dst[i * out_f + o] = acc + (spec.bias ? spec.bias->data()[o] : T{0});
    }
  }
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  std::vector<T> values(input.data().begin(), input.data().end());
  for (T& v : values) v = std::max(v, T{0});
  return Tensor<T>(input.shape(), std::move(values));
}

template <typename T>
Tensor<T> maxpool2d(const Tensor<T>& input, const Pool2dSpec& s) {
  const Shape out_shape = pool2d_output_shape(s, input.shape(), false);
  const std::size_t planes = out_shape[0] * out_shape[1];
  const std::size_t h = input.dim(2), w = input.dim(3), hout = out_shape[2], wout = out_shape[3];
  auto out = Tensor<T>::zeros(out_shape);
  T* dst = out.mutable_data().data();
  const T* src = input.data().data();
  for (std::size_t p = 0; p < planes; ++p) {
    const T* plane = src + p * h * w;
    for (std::size_t y = 0; y < hout; ++y) {
      for (std::size_t x = 0; x < wout; ++x) {
        T best = -std::numeric_limits<T>::infinity();
        for (std::size_t i = 0; i < s.kernel.h; ++i) {
          const Index iy = static_cast<Index>(y * s.stride.h + i * s.dilation.h) - static_cast<Index>(s.padding.h);
          if (iy < 0 || iy >= static_cast<Index>(h)) continue;
          for (std::size_t j = 0; j < s.kernel.w; ++j) {
            const Index ix = static_cast<Index>(x * s.stride.w + j * s.dilation.w) - static_cast<Index>(s.padding.w);
            if (ix < 0 || ix >= static_cast<Index>(w)) continue;
            best = std::max(best, plane[iy * static_cast<Index>(w) + ix]);
          }
        }
        dst[(p * hout + y) * wout + x] = best;
      }
    }
  }
  return out;
}

// Mean of plane[ya..yb) x [xa..xb), taken as an offset from the first
// element so a constant window reproduces its value exactly.
template <typename T>
T window_mean(const T* plane, std::size_t w, std::size_t ya, std::size_t yb, std::size_t xa, std::size_t xb) {
  const T anchor = plane[ya * w + xa];
  T deviation{0};
  for (std::size_t iy = ya; iy < yb; ++iy) {
    for (std::size_t ix = xa; ix < xb; ++ix) deviation += plane[iy * w + ix] - anchor;
  }
  return anchor + deviation / static_cast<T>((yb - ya) * (xb - xa));
}

template <typename T>
Tensor<T> avgpool2d(const Tensor<T>& input, const Pool2dSpec& s) {
  const Shape out_shape = pool2d_output_shape(s, input.shape(), true);
  const std::size_t planes = out_shape[0] * out_shape[1];
  const std::size_t h = input.dim(2), w = input.dim(3), hout = out_shape[2], wout = out_shape[3];
  auto out = Tensor<T>::zeros(out_shape);
  T* dst = out.mutable_data().data();
  const T* src = input.data().data();
  for (std::size_t p = 0; p < planes; ++p) {
    const T* plane = src + p * h * w;
    for (std::size_t y = 0; y < hout; ++y) {
      const Index y0 = static_cast<Index>(y * s.stride.h) - static_cast<Index>(s.padding.h);
      const Index ya = std::max<Index>(y0, 0);
      const Index yb = std::min<Index>(y0 + static_cast<Index>(s.kernel.h), static_cast<Index>(h));
      for (std::size_t x = 0; x < wout; ++x) {
        const Index x0 = static_cast<Index>(x * s.stride.w) - static_cast<Index>(s.padding.w);
        const Index xa = std::max<Index>(x0, 0);
        const Index xb = std::min<Index>(x0 + static_cast<Index>(s.kernel.w), static_cast<Index>(w));
        // A window always overlaps the input because padding <= kernel / 2.
        dst[(p * hout + y) * wout + x] = window_mean(plane, w, static_cast<std::size_t>(ya), static_cast<std::size_t>(yb),
                                                     static_cast<std::size_t>(xa), static_cast<std::size_t>(xb));
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> adaptive_avgpool2d(const Tensor<T>& input, Extent2 size) {
  const Shape out_shape = adaptive_avgpool2d_output_shape(size, input.shape());
  const std::size_t planes = out_shape[0] * out_shape[1];
  const std::size_t h = input.dim(2), w = input.dim(3);
  auto out = Tensor<T>::zeros(out_shape);
  T* dst = out.mutable_data().data();
  const T* src = input.data().data();
  for (std::size_t p = 0; p < planes; ++p) {
    const T* plane = src + p * h * w;
    for (std::size_t oy = 0; oy < size.h; ++oy) {
      const std::size_t ya = oy * h / size.h;
      const std::size_t yb = ((oy + 1) * h + size.h - 1) / size.h;
      for (std::size_t ox = 0; ox < size.w; ++ox) {
        const std::size_t xa = ox * w / size.w;
        const std::size_t xb = ((ox + 1) * w + size.w - 1) / size.w;
        dst[(p * size.h + oy) * size.w + ox] = window_mean(plane, w, ya, yb, xa, xb);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> flatten(const Tensor<T>& input, std::size_t start_dim) {
  return input.reshaped(flatten_output_shape(start_dim, input.shape()));
}

#define SWAPNET_INSTANTIATE(T)                                                   \
  template void validate<T>(const LinearSpec<T>&);                               \
  template Tensor<T> linear<T>(const Tensor<T>&, const LinearSpec<T>&);          \
  template Tensor<T> relu<T>(const Tensor<T>&);                                  \
  template Tensor<T> maxpool2d<T>(const Tensor<T>&, const Pool2dSpec&);          \
  template Tensor<T> avgpool2d<T>(const Tensor<T>&, const Pool2dSpec&);          \
  template Tensor<T> adaptive_avgpool2d<T>(const Tensor<T>&, Extent2);           \
  template Tensor<T> flatten<T>(const Tensor<T>&, std::size_t);

SWAPNET_INSTANTIATE(float)
SWAPNET_INSTANTIATE(double)
#undef SWAPNET_INSTANTIATE

}  // namespace swapnet
