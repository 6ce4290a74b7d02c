#include "swapnet/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>

#include "swapnet/gemm.hpp"
#include "swapnet/scratch.hpp"

namespace swapnet {

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t extent : shape) n *= extent;
  return n;
}

std::string to_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

std::string to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

Precision parse_precision(const std::string& text) {
  if (text == "f32") return Precision::f32;
  if (text == "f64") return Precision::f64;
  throw Error("unknown precision '" + text + "' (expected f32 or f64)");
}

template <typename T>
Tensor<T> zero_pad_2d(const Tensor<T>& t, std::size_t pad_h, std::size_t pad_w) {
  if (t.rank() != 4) {
    throw ShapeError("zero_pad_2d expects a rank-4 tensor, got " + to_string(t.shape()));
  }
  if (pad_h == 0 && pad_w == 0) return t;
  const std::size_t n = t.dim(0), c = t.dim(1), h = t.dim(2), w = t.dim(3);
  const std::size_t ph = h + 2 * pad_h, pw = w + 2 * pad_w;
  auto out = Tensor<T>::zeros({n, c, ph, pw});
  auto dst = out.mutable_data();
  auto src = t.data();
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    for (std::size_t y = 0; y < h; ++y) {
      const T* row = src.data() + (plane * h + y) * w;
      std::copy(row, row + w, dst.data() + (plane * ph + y + pad_h) * pw + pad_w);
    }
  }
  return out;
}

namespace {
constexpr std::size_t kRowBlock = 64;
constexpr std::size_t kDepthBlock = 256;
constexpr std::size_t kColBlock = 1024;
}  // namespace

template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, StridedMatrix<T> a, const T* b, T* c, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, T{0});
  for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
    const std::size_t j1 = std::min(n, j0 + kColBlock);
    for (std::size_t i0 = 0; i0 < m; i0 += kRowBlock) {
      const std::size_t i1 = std::min(m, i0 + kRowBlock);
      for (std::size_t p0 = 0; p0 < k; p0 += kDepthBlock) {
        const std::size_t p1 = std::min(k, p0 + kDepthBlock);
        for (std::size_t i = i0; i < i1; ++i) {
          T* c_row = c + i * n;
          for (std::size_t p = p0; p < p1; ++p) {
            const T aip = a(i, p);
            const T* b_row = b + p * n;
            for (std::size_t j = j0; j < j1; ++j) c_row[j] += aip * b_row[j];
          }
        }
      }
    }
  }
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul dimension mismatch: " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  auto out = Tensor<T>::zeros({m, n});
  gemm<T>(m, n, k, StridedMatrix<T>{a.data().data(), k, 1}, b.data().data(), out.mutable_data().data(), false);
  return out;
}

template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = std::abs(static_cast<double>(x[i]) - static_cast<double>(y[i]));
    // NaN compares false, so route it to +inf explicitly.
    if (!(d <= worst)) worst = std::isnan(d) ? std::numeric_limits<double>::infinity() : d;
  }
  return worst;
}

template <typename T>
bool allclose(const Tensor<T>& a, const Tensor<T>& b, double atol) {
  return max_abs_diff(a, b) <= atol;
}

#define SWAPNET_INSTANTIATE(T)                                                                         \
  template Tensor<T> zero_pad_2d<T>(const Tensor<T>&, std::size_t, std::size_t);                       \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                                   \
  template double max_abs_diff<T>(const Tensor<T>&, const Tensor<T>&);                                \
  template bool allclose<T>(const Tensor<T>&, const Tensor<T>&, double);                              \
  template void gemm<T>(std::size_t, std::size_t, std::size_t, StridedMatrix<T>, const T*, T*, bool);

SWAPNET_INSTANTIATE(float)
SWAPNET_INSTANTIATE(double)
#undef SWAPNET_INSTANTIATE

namespace scratch {
namespace {
std::atomic<std::size_t> g_peak{0};
}

void reset_peak() noexcept { g_peak.store(0); }
std::size_t peak_elements() noexcept { return g_peak.load(); }

void note_allocation(std::size_t elements) noexcept {
  std::size_t seen = g_peak.load();
  while (elements > seen && !g_peak.compare_exchange_weak(seen, elements)) {
  }
}
}  // namespace scratch

}  // namespace swapnet
