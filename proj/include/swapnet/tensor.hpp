#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "swapnet/errors.hpp"

namespace swapnet {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string to_string(const Shape& shape);

enum class Precision { f32, f64 };

std::string to_string(Precision p);
Precision parse_precision(const std::string& text);

template <typename T>
constexpr Precision precision_of();
template <>
constexpr Precision precision_of<float>() { return Precision::f32; }
template <>
constexpr Precision precision_of<double>() { return Precision::f64; }

/// Dense row-major array (last axis fastest). Four-dimensional activations
/// use N,C,H,W axis order.
///
/// Shape is fixed at construction; element storage is owned. Kernels build
/// their result through mutable_data() before handing the tensor out, and
/// nothing mutates a tensor after that.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty()) {
      throw ShapeError("tensor shape must have at least one axis");
    }
    for (std::size_t extent : shape_) {
      if (extent == 0) {
        throw ShapeError("tensor extent must be >= 1, got shape " + to_string(shape_));
      }
    }
    if (element_count(shape_) != data_.size()) {
      throw ShapeError("tensor shape " + to_string(shape_) + " holds " +
                       std::to_string(element_count(shape_)) + " elements but data has " +
                       std::to_string(data_.size()));
    }
  }

  static Tensor zeros(Shape shape) { return filled(std::move(shape), T{0}); }

  static Tensor filled(Shape shape, T value) {
    const std::size_t n = element_count(shape);
    return Tensor(std::move(shape), std::vector<T>(n, value));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }

  std::span<const T> data() const noexcept { return data_; }
  std::span<T> mutable_data() noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  // Multi-index element access, bounds checked.
  T at(std::initializer_list<std::size_t> index) const { return data_[offset(index)]; }

  Tensor reshaped(Shape shape) const {
    if (element_count(shape) != data_.size()) {
      throw ShapeError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  template <typename U>
  Tensor<U> cast() const {
    return Tensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t offset(std::initializer_list<std::size_t> index) const {
    if (index.size() != shape_.size()) {
      throw ShapeError("index rank " + std::to_string(index.size()) + " does not match tensor rank " +
                       std::to_string(shape_.size()));
    }
    std::size_t flat = 0;
    std::size_t axis = 0;
    for (std::size_t i : index) {
      if (i >= shape_[axis]) {
        throw ShapeError("index " + std::to_string(i) + " out of range on axis " + std::to_string(axis));
      }
      flat = flat * shape_[axis] + i;
      ++axis;
    }
    return flat;
  }

  Shape shape_;
  std::vector<T> data_;
};

// Zero padding on the two trailing (spatial) axes of an N,C,H,W tensor.
template <typename T>
Tensor<T> zero_pad_2d(const Tensor<T>& t, std::size_t pad_h, std::size_t pad_w);

// (M x K) * (K x N) -> (M x N), both operands rank 2.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

/// Largest absolute elementwise difference; +inf when shapes differ.
template <typename T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b);

// True iff shapes are equal and every |a_i - b_i| <= atol.
template <typename T>
bool allclose(const Tensor<T>& a, const Tensor<T>& b, double atol);

}  // namespace swapnet
