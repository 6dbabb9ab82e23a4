#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tgc/core/error.hpp"

namespace tgc {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

/// Dense row-major array of scalars. Value type; copies are deep.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{0}) : shape_(std::move(shape)) {
    check_extents();
    data_.assign(shape_size(shape_), fill);
  }

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_extents();
    if (shape_size(shape_) != data_.size()) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_str(shape_));
    }
  }

  static Tensor scalar(T v) { return Tensor(Shape{1}, std::vector<T>{v}); }

  [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t rank() const noexcept { return shape_.size(); }
  [[nodiscard]] std::size_t dim(std::size_t i) const { return shape_.at(i); }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] std::span<T> data() noexcept { return data_; }
  [[nodiscard]] std::span<const T> data() const noexcept { return data_; }
  [[nodiscard]] T* ptr() noexcept { return data_.data(); }
  [[nodiscard]] const T* ptr() const noexcept { return data_.data(); }
  [[nodiscard]] std::vector<T>& storage() noexcept { return data_; }
  [[nodiscard]] const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  [[nodiscard]] T item() const {
    if (data_.size() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape_));
    return data_[0];
  }

  [[nodiscard]] Tensor reshaped(Shape shape) const {
    if (shape_size(shape) != data_.size()) {
      throw DimensionError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    return Tensor(std::move(shape), data_);
  }

  void reshape_in_place(Shape shape) {
    if (shape_size(shape) != data_.size()) {
      throw DimensionError("cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    }
    shape_ = std::move(shape);
  }

  void fill(T v) noexcept { std::fill(data_.begin(), data_.end(), v); }

  template <typename U>
  [[nodiscard]] Tensor<U> cast() const {
    std::vector<U> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
    return Tensor<U>(shape_, std::move(out));
  }

  Tensor& operator+=(const Tensor& other) {
    require_same_shape(other, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  [[nodiscard]] bool all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  [[nodiscard]] T sum() const noexcept { return std::accumulate(data_.begin(), data_.end(), T{0}); }

  [[nodiscard]] T squared_norm() const noexcept {
    T acc{0};
    for (T v : data_) acc += v * v;
    return acc;
  }

  void require_same_shape(const Tensor& other, std::string_view what) const {
    if (other.shape_ != shape_) {
      throw DimensionError(std::string(what) + ": shape mismatch " + shape_str(shape_) +
                           " vs " + shape_str(other.shape_));
    }
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  void check_extents() const {
    for (std::size_t e : shape_) {
      if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape_));
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

template <typename T>
T dot(const Tensor<T>& a, const Tensor<T>& b) {
  a.require_same_shape(b, "dot");
  T acc{0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
T l2_distance(const Tensor<T>& a, const Tensor<T>& b) {
  a.require_same_shape(b, "l2_distance");
  T acc{0};
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

/// Summary used in diagnostic dumps.
struct TensorStats {
  double min = 0, max = 0, mean = 0;
  std::size_t non_finite = 0;
};

template <typename T>
TensorStats tensor_stats(const Tensor<T>& t) {
  TensorStats s;
  bool first = true;
  double acc = 0;
  for (T v : t.data()) {
    if (!std::isfinite(v)) {
      ++s.non_finite;
      continue;
    }
    const double d = static_cast<double>(v);
    if (first) {
      s.min = s.max = d;
      first = false;
    }
    s.min = std::min(s.min, d);
    s.max = std::max(s.max, d);
    acc += d;
  }
  const std::size_t finite = t.size() - s.non_finite;
  s.mean = finite ? acc / static_cast<double>(finite) : 0.0;
  return s;
}

}  // namespace tgc
