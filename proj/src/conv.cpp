#include "swapnet/conv.hpp"

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "swapnet/gemm.hpp"
#include "swapnet/scratch.hpp"

namespace swapnet {

namespace {

using Index = std::int64_t;

// Tap range [lo, hi) whose sample position out*stride - pad + tap*dil lands
// inside [0, extent).
std::pair<std::size_t, std::size_t> valid_taps(std::size_t out, std::size_t stride, std::size_t pad,
                                               std::size_t dil, std::size_t taps, std::size_t extent) {
  const Index base = static_cast<Index>(out * stride) - static_cast<Index>(pad);
  const Index d = static_cast<Index>(dil);
  Index lo = 0;
  if (base < 0) lo = (-base + d - 1) / d;
  Index hi = 0;
  if (base < static_cast<Index>(extent)) hi = (static_cast<Index>(extent) - 1 - base) / d + 1;
  hi = std::min<Index>(hi, static_cast<Index>(taps));
  if (lo >= hi) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

template <typename T>
void add_bias(Tensor<T>& out, const std::optional<Tensor<T>>& bias) {
  if (!bias) return;
  const std::size_t n = out.dim(0), o = out.dim(1), plane = out.dim(2) * out.dim(3);
  auto dst = out.mutable_data();
  auto b = bias->data();
  for (std::size_t ni = 0; ni < n; ++ni) {
    for (std::size_t oi = 0; oi < o; ++oi) {
      T* p = dst.data() + (ni * o + oi) * plane;
      for (std::size_t q = 0; q < plane; ++q) p[q] += b[oi];
    }
  }
}

template <typename T>
Shape checked_output_shape(const Tensor<T>& input, const Conv2dSpec<T>& spec) {
  validate(spec);
  return conv2d_output_shape(spec.params, input.shape());
}

// Fills `cols` ((C*kh*kw) x (Hout*Wout)) for one batch element.
template <typename T>
void unroll_patches(const T* image, const ConvParams& p, std::size_t h, std::size_t w, std::size_t hout,
                    std::size_t wout, T* cols) {
  const std::size_t columns = hout * wout;
  for (std::size_t c = 0; c < p.in_channels; ++c) {
    const T* plane = image + c * h * w;
    for (std::size_t i = 0; i < p.kernel.h; ++i) {
      for (std::size_t j = 0; j < p.kernel.w; ++j) {
        T* row = cols + ((c * p.kernel.h + i) * p.kernel.w + j) * columns;
        for (std::size_t y = 0; y < hout; ++y) {
          const Index iy = static_cast<Index>(y * p.stride.h + i * p.dilation.h) - static_cast<Index>(p.padding.h);
          T* dst = row + y * wout;
          if (iy < 0 || iy >= static_cast<Index>(h)) {
            std::fill(dst, dst + wout, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * w;
          for (std::size_t x = 0; x < wout; ++x) {
            const Index ix =
                static_cast<Index>(x * p.stride.w + j * p.dilation.w) - static_cast<Index>(p.padding.w);
            dst[x] = (ix < 0 || ix >= static_cast<Index>(w)) ? T{0} : src[ix];
          }
        }
      }
    }
  }
}

}  // namespace

void validate(const ConvParams& p) {
  if (p.in_channels == 0 || p.out_channels == 0) throw ShapeError("conv2d channel counts must be >= 1");
  if (p.kernel.h == 0 || p.kernel.w == 0) throw ShapeError("conv2d kernel extents must be >= 1");
  if (p.stride.h == 0 || p.stride.w == 0) throw ShapeError("conv2d stride must be >= 1");
  if (p.dilation.h == 0 || p.dilation.w == 0) throw ShapeError("conv2d dilation must be >= 1");
}

template <typename T>
void validate(const Conv2dSpec<T>& spec) {
  const ConvParams& p = spec.params;
  validate(p);
  const Shape expected{p.out_channels, p.in_channels, p.kernel.h, p.kernel.w};
  if (spec.weight.shape() != expected) {
    throw ShapeError("conv2d weight shape " + to_string(spec.weight.shape()) + " does not match " +
                     to_string(expected));
  }
  if (spec.bias && spec.bias->shape() != Shape{p.out_channels}) {
    throw ShapeError("conv2d bias shape " + to_string(spec.bias->shape()) + " does not match (" +
                     std::to_string(p.out_channels) + ")");
  }
}

std::string_view to_string(ConvAlgo algo) {
  switch (algo) {
    case ConvAlgo::direct: return "direct";
    case ConvAlgo::im2col: return "im2col";
    case ConvAlgo::kn2row: return "kn2row";
    case ConvAlgo::smm: return "smm";
    case ConvAlgo::winograd: return "winograd";
  }
  return "?";
}

std::optional<ConvAlgo> parse_conv_algo(std::string_view name) {
  for (ConvAlgo a : kConvAlgos) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

Shape conv2d_output_shape(const ConvParams& p, const Shape& in) {
  validate(p);
  if (in.size() != 4) throw ShapeError("conv2d expects (N, C, H, W) input, got " + to_string(in));
  if (in[1] != p.in_channels) {
    throw ShapeError("conv2d expects " + std::to_string(p.in_channels) + " input channels, got " +
                     std::to_string(in[1]));
  }
  const std::size_t eff_h = p.dilation.h * (p.kernel.h - 1) + 1;
  const std::size_t eff_w = p.dilation.w * (p.kernel.w - 1) + 1;
  const std::size_t padded_h = in[2] + 2 * p.padding.h;
  const std::size_t padded_w = in[3] + 2 * p.padding.w;
  if (eff_h > padded_h || eff_w > padded_w) {
    throw ShapeError("conv2d effective kernel " + std::to_string(eff_h) + "x" + std::to_string(eff_w) +
                     " exceeds padded input " + std::to_string(padded_h) + "x" + std::to_string(padded_w));
  }
  return {in[0], p.out_channels, (padded_h - eff_h) / p.stride.h + 1, (padded_w - eff_w) / p.stride.w + 1};
}

std::optional<std::string> unsupported_reason(ConvAlgo algo, const ConvParams& p) {
  if (algo != ConvAlgo::winograd) return std::nullopt;
  if (p.kernel.h != 3 || p.kernel.w != 3) {
    return "winograd requires a 3x3 kernel, got " + std::to_string(p.kernel.h) + "x" + std::to_string(p.kernel.w);
  }
  if (p.stride.h != 1 || p.stride.w != 1) return std::string("winograd requires stride 1");
  if (p.dilation.h != 1 || p.dilation.w != 1) return std::string("winograd requires dilation 1");
  return std::nullopt;
}

bool supports(ConvAlgo algo, const ConvParams& params) { return !unsupported_reason(algo, params); }

ConvAlgo conv2d_auto(const Shape& /*input_shape*/, const ConvParams& p) {
  if (supports(ConvAlgo::winograd, p)) return ConvAlgo::winograd;
  const bool pointwise = p.kernel.h == 1 && p.kernel.w == 1;
  if (pointwise || p.in_channels * p.kernel.h * p.kernel.w >= 32) return ConvAlgo::im2col;
  return ConvAlgo::direct;
}

template <typename T>
Tensor<T> conv2d_direct(const Tensor<T>& input, const Conv2dSpec<T>& spec) {
  const Shape out_shape = checked_output_shape(input, spec);
  const ConvParams& p = spec.params;
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t o = out_shape[1], hout = out_shape[2], wout = out_shape[3];
  const std::size_t kh = p.kernel.h, kw = p.kernel.w;

  std::vector<std::pair<std::size_t, std::size_t>> rows(hout), cols(wout);
  for (std::size_t y = 0; y < hout; ++y) rows[y] = valid_taps(y, p.stride.h, p.padding.h, p.dilation.h, kh, h);
  for (std::size_t x = 0; x < wout; ++x) cols[x] = valid_taps(x, p.stride.w, p.padding.w, p.dilation.w, kw, w);

  auto out = Tensor<T>::zeros(out_shape);
  T* dst = out.mutable_data().data();
  const T* src = input.data().data();
  const T* wt = spec.weight.data().data();
  for (std::size_t ni = 0; ni < n; ++ni) {
    for (std::size_t oi = 0; oi < o; ++oi) {
      for (std::size_t y = 0; y < hout; ++y) {
        const auto [i0, i1] = rows[y];
        const Index row_base = static_cast<Index>(y * p.stride.h) - static_cast<Index>(p.padding.h);
        for (std::size_t x = 0; x < wout; ++x) {
          const auto [j0, j1] = cols[x];
          const Index col_base = static_cast<Index>(x * p.stride.w) - static_cast<Index>(p.padding.w);
          T acc{0};
          for (std::size_t ci = 0; ci < c; ++ci) {
            const T* plane = src + (ni * c + ci) * h * w;
            const T* kern = wt + (oi * c + ci) * kh * kw;
            for (std::size_t i = i0; i < i1; ++i) {
              const T* line = plane + static_cast<std::size_t>(row_base + static_cast<Index>(i * p.dilation.h)) * w;
              for (std::size_t j = j0; j < j1; ++j) {
                acc += line[col_base + static_cast<Index>(j * p.dilation.w)] * kern[i * kw + j];
              }
            }
          }
          dst[((ni * o + oi) * hout + y) * wout + x] = acc;
        }
      }
    }
  }
  add_bias(out, spec.bias);
  return out;
}

template <typename T>
Tensor<T> im2col_transform(const Tensor<T>& input, const ConvParams& params, std::size_t batch) {
  const Shape out_shape = conv2d_output_shape(params, input.shape());
  if (batch >= input.dim(0)) {
    throw ShapeError("im2col batch index " + std::to_string(batch) + " out of range for " + to_string(input.shape()));
  }
  const std::size_t h = input.dim(2), w = input.dim(3);
  const std::size_t rows = params.in_channels * params.kernel.h * params.kernel.w;
  auto cols = Tensor<T>::zeros({rows, out_shape[2] * out_shape[3]});
  unroll_patches(input.data().data() + batch * params.in_channels * h * w, params, h, w, out_shape[2], out_shape[3],
                 cols.mutable_data().data());
  return cols;
}

template <typename T>
Tensor<T> conv2d_im2col(const Tensor<T>& input, const Conv2dSpec<T>& spec) {
  const Shape out_shape = checked_output_shape(input, spec);
  const ConvParams& p = spec.params;
  const std::size_t n = input.dim(0), h = input.dim(2), w = input.dim(3);
  const std::size_t o = out_shape[1], hout = out_shape[2], wout = out_shape[3];
  const std::size_t patch = p.in_channels * p.kernel.h * p.kernel.w;
  const std::size_t columns = hout * wout;

  auto cols = scratch::buffer<T>(patch * columns);
  auto out = Tensor<T>::zeros(out_shape);
  const StridedMatrix<T> weights{spec.weight.data().data(), patch, 1};
  for (std::size_t ni = 0; ni < n; ++ni) {
    unroll_patches(input.data().data() + ni * p.in_channels * h * w, p, h, w, hout, wout, cols.data());
    gemm<T>(o, columns, patch, weights, cols.data(), out.mutable_data().data() + ni * o * columns, false);
  }
  add_bias(out, spec.bias);
  return out;
}

template <typename T>
Tensor<T> conv2d_kn2row(const Tensor<T>& input, const Conv2dSpec<T>& spec) {
  const Shape out_shape = checked_output_shape(input, spec);
  const ConvParams& p = spec.params;
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  const std::size_t o = out_shape[1], hout = out_shape[2], wout = out_shape[3];
  const std::size_t kh = p.kernel.h, kw = p.kernel.w;
  const std::size_t taps = kh * kw;

  auto out = Tensor<T>::zeros(out_shape);
  T* dst = out.mutable_data().data();
  const T* src = input.data().data();
  const T* wt = spec.weight.data().data();

  const bool pointwise = taps == 1 && p.stride == Extent2{1, 1} && p.padding == Extent2{0, 0};
  if (pointwise) {
    for (std::size_t ni = 0; ni < n; ++ni) {
      gemm<T>(o, h * w, c, StridedMatrix<T>{wt, c, 1}, src + ni * c * h * w, dst + ni * o * h * w, false);
    }
    add_bias(out, spec.bias);
    return out;
  }

  std::vector<std::pair<std::size_t, std::size_t>> rows(hout), cols(wout);
  auto partial = scratch::buffer<T>(o * h * w);
  for (std::size_t ni = 0; ni < n; ++ni) {
    const T* image = src + ni * c * h * w;
    T* result = dst + ni * o * hout * wout;
    for (std::size_t i = 0; i < kh; ++i) {
      for (std::size_t j = 0; j < kw; ++j) {
        // Weight slice W[:, :, i, j] read in place: rows step over a whole
        // filter, columns over one channel's taps.
        gemm<T>(o, h * w, c, StridedMatrix<T>{wt + i * kw + j, c * taps, taps}, image, partial.data(), false);
        for (std::size_t y = 0; y < hout; ++y) {
          const Index iy = static_cast<Index>(y * p.stride.h + i * p.dilation.h) - static_cast<Index>(p.padding.h);
          if (iy < 0 || iy >= static_cast<Index>(h)) continue;
          for (std::size_t x = 0; x < wout; ++x) {
            const Index ix = static_cast<Index>(x * p.stride.w + j * p.dilation.w) - static_cast<Index>(p.padding.w);
            if (ix < 0 || ix >= static_cast<Index>(w)) continue;
            const std::size_t from = static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix);
            for (std::size_t oi = 0; oi < o; ++oi) {
              result[(oi * hout + y) * wout + x] += partial[oi * h * w + from];
            }
          }
        }
      }
    }
  }
  add_bias(out, spec.bias);
  return out;
}

template <typename T>
Tensor<T> conv2d_smm(const Tensor<T>& input, const Conv2dSpec<T>& spec) {
  const Shape out_shape = checked_output_shape(input, spec);
  const ConvParams& p = spec.params;
  const Tensor<T> packed = zero_pad_2d(input, p.padding.h, p.padding.w);
  scratch::note_allocation(packed.size());
  const std::size_t n = packed.dim(0), c = packed.dim(1), hp = packed.dim(2), wp = packed.dim(3);
  const std::size_t o = out_shape[1], hout = out_shape[2], wout = out_shape[3];
  const std::size_t kh = p.kernel.h, kw = p.kernel.w;

  auto out = Tensor<T>::zeros(out_shape);
  T* dst = out.mutable_data().data();
  const T* src = packed.data().data();
  const T* wt = spec.weight.data().data();
  for (std::size_t ni = 0; ni < n; ++ni) {
    for (std::size_t oi = 0; oi < o; ++oi) {
      T* plane_out = dst + (ni * o + oi) * hout * wout;
      for (std::size_t ci = 0; ci < c; ++ci) {
        const T* plane_in = src + (ni * c + ci) * hp * wp;
        for (std::size_t i = 0; i < kh; ++i) {
          for (std::size_t j = 0; j < kw; ++j) {
            const T scale = wt[((oi * c + ci) * kh + i) * kw + j];
            for (std::size_t y = 0; y < hout; ++y) {
              const T* shifted = plane_in + (y * p.stride.h + i * p.dilation.h) * wp + j * p.dilation.w;
              T* line = plane_out + y * wout;
              if (p.stride.w == 1) {
                for (std::size_t x = 0; x < wout; ++x) line[x] += scale * shifted[x];
              } else {
                for (std::size_t x = 0; x < wout; ++x) line[x] += scale * shifted[x * p.stride.w];
              }
            }
          }
        }
      }
    }
  }
  add_bias(out, spec.bias);
  return out;
}

template <typename T>
Tensor<T> conv2d_winograd(const Tensor<T>& input, const Conv2dSpec<T>& spec) {
  const Shape out_shape = checked_output_shape(input, spec);
  const ConvParams& p = spec.params;
  if (auto reason = unsupported_reason(ConvAlgo::winograd, p)) throw UnsupportedConfiguration(*reason);

  const Tensor<T> packed = zero_pad_2d(input, p.padding.h, p.padding.w);
  const std::size_t n = packed.dim(0), c = packed.dim(1), hp = packed.dim(2), wp = packed.dim(3);
  const std::size_t o = out_shape[1], hout = out_shape[2], wout = out_shape[3];
  const std::size_t tiles_h = (hout + 1) / 2, tiles_w = (wout + 1) / 2;
  const std::size_t tiles = n * tiles_h * tiles_w;
  constexpr std::size_t kTile = 16;  // 4x4 transformed tile

  // U[xi][o][c] = (G g G^T)[xi] for filter g = W[o][c].
  std::vector<T> u(kTile * o * c);
  const T half{0.5};
  const T* wt = spec.weight.data().data();
  for (std::size_t oi = 0; oi < o; ++oi) {
    for (std::size_t ci = 0; ci < c; ++ci) {
      const T* g = wt + (oi * c + ci) * 9;
      T gg[4][3];
      for (std::size_t col = 0; col < 3; ++col) {
        gg[0][col] = g[col];
        gg[1][col] = half * (g[col] + g[3 + col] + g[6 + col]);
        gg[2][col] = half * (g[col] - g[3 + col] + g[6 + col]);
        gg[3][col] = g[6 + col];
      }
      for (std::size_t r = 0; r < 4; ++r) {
        const T v[4] = {gg[r][0], half * (gg[r][0] + gg[r][1] + gg[r][2]), half * (gg[r][0] - gg[r][1] + gg[r][2]),
                        gg[r][2]};
        for (std::size_t s = 0; s < 4; ++s) u[((r * 4 + s) * o + oi) * c + ci] = v[s];
      }
    }
  }

  // V[xi][c][tile] = (B^T d B)[xi] for the 4x4 input tile d.
  auto v = scratch::buffer<T>(kTile * c * tiles);
  const T* src = packed.data().data();
  for (std::size_t ni = 0; ni < n; ++ni) {
    for (std::size_t ci = 0; ci < c; ++ci) {
      const T* plane = src + (ni * c + ci) * hp * wp;
      for (std::size_t ty = 0; ty < tiles_h; ++ty) {
        for (std::size_t tx = 0; tx < tiles_w; ++tx) {
          T d[4][4];
          for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t s = 0; s < 4; ++s) {
              const std::size_t y = 2 * ty + r, x = 2 * tx + s;
              d[r][s] = (y < hp && x < wp) ? plane[y * wp + x] : T{0};
            }
          }
          T bd[4][4];
          for (std::size_t s = 0; s < 4; ++s) {
            bd[0][s] = d[0][s] - d[2][s];
            bd[1][s] = d[1][s] + d[2][s];
            bd[2][s] = d[2][s] - d[1][s];
            bd[3][s] = d[1][s] - d[3][s];
          }
          const std::size_t tile = (ni * tiles_h + ty) * tiles_w + tx;
          for (std::size_t r = 0; r < 4; ++r) {
            const T row[4] = {bd[r][0] - bd[r][2], bd[r][1] + bd[r][2], bd[r][2] - bd[r][1], bd[r][1] - bd[r][3]};
            for (std::size_t s = 0; s < 4; ++s) v[((r * 4 + s) * c + ci) * tiles + tile] = row[s];
          }
        }
      }
    }
  }

  // M[xi] = U[xi] (o x c) * V[xi] (c x tiles); the channel sum of the
  // elementwise products becomes one GEMM per tile position.
  std::vector<T> m(kTile * o * tiles);
  for (std::size_t xi = 0; xi < kTile; ++xi) {
    gemm<T>(o, tiles, c, StridedMatrix<T>{u.data() + xi * o * c, c, 1}, v.data() + xi * c * tiles,
            m.data() + xi * o * tiles, false);
  }

  auto out = Tensor<T>::zeros(out_shape);
  T* dst = out.mutable_data().data();
  for (std::size_t oi = 0; oi < o; ++oi) {
    for (std::size_t tile = 0; tile < tiles; ++tile) {
      T mm[4][4];
      for (std::size_t xi = 0; xi < kTile; ++xi) mm[xi / 4][xi % 4] = m[(xi * o + oi) * tiles + tile];
      T am[2][4];
      for (std::size_t s = 0; s < 4; ++s) {
        am[0][s] = mm[0][s] + mm[1][s] + mm[2][s];
        am[1][s] = mm[1][s] - mm[2][s] - mm[3][s];
      }
      const std::size_t ni = tile / (tiles_h * tiles_w);
      const std::size_t ty = (tile / tiles_w) % tiles_h, tx = tile % tiles_w;
      for (std::size_t r = 0; r < 2; ++r) {
        const T y2[2] = {am[r][0] + am[r][1] + am[r][2], am[r][1] - am[r][2] - am[r][3]};
        const std::size_t y = 2 * ty + r;
        if (y >= hout) continue;
        for (std::size_t s = 0; s < 2; ++s) {
          const std::size_t x = 2 * tx + s;
          if (x < wout) dst[((ni * o + oi) * hout + y) * wout + x] = y2[s];
        }
      }
    }
  }
  add_bias(out, spec.bias);
  return out;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Conv2dSpec<T>& spec, ConvAlgo algo) {
  switch (algo) {
    case ConvAlgo::direct: return conv2d_direct(input, spec);
    case ConvAlgo::im2col: return conv2d_im2col(input, spec);
    case ConvAlgo::kn2row: return conv2d_kn2row(input, spec);
    case ConvAlgo::smm: return conv2d_smm(input, spec);
    case ConvAlgo::winograd: return conv2d_winograd(input, spec);
  }
  throw UnknownAlgorithm("unhandled conv algorithm");
}

#define SWAPNET_INSTANTIATE(T)                                                             \
  template void validate<T>(const Conv2dSpec<T>&);                                         \
  template Tensor<T> conv2d_direct<T>(const Tensor<T>&, const Conv2dSpec<T>&);             \
  template Tensor<T> im2col_transform<T>(const Tensor<T>&, const ConvParams&, std::size_t); \
  template Tensor<T> conv2d_im2col<T>(const Tensor<T>&, const Conv2dSpec<T>&);             \
  template Tensor<T> conv2d_kn2row<T>(const Tensor<T>&, const Conv2dSpec<T>&);             \
  template Tensor<T> conv2d_smm<T>(const Tensor<T>&, const Conv2dSpec<T>&);                \
  template Tensor<T> conv2d_winograd<T>(const Tensor<T>&, const Conv2dSpec<T>&);           \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Conv2dSpec<T>&, ConvAlgo);

SWAPNET_INSTANTIATE(float)
SWAPNET_INSTANTIATE(double)
#undef SWAPNET_INSTANTIATE

}  // namespace swapnet
