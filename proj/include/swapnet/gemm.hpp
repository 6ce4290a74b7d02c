#pragma once

#include <cstddef>

namespace swapnet {

// Read-only matrix with arbitrary row/column strides, used to feed weight
// slices into the GEMM without repacking them.
template <typename T>
struct StridedMatrix {
  const T* data;
  std::size_t row_stride;
  std::size_t col_stride;

  const T& operator()(std::size_t r, std::size_t c) const { return data[r * row_stride + c * col_stride]; }
};

/// C (m x n, row-major, leading dimension n) = A (m x k) * B (k x n, row-major,
/// leading dimension n), or C += A*B when `accumulate` is set.
///
/// Blocked over rows, depth and columns. Every c[i][j] accumulates its k terms
/// in increasing k order, so results match a naive i-k-j loop bit for bit.
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, StridedMatrix<T> a, const T* b, T* c, bool accumulate);

}  // namespace swapnet
