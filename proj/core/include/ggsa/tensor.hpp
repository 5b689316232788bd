#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "ggsa/error.hpp"

namespace ggsa {

enum class Precision { kSingle, kDouble };

// Extents of a rank 1-3 array. Every extent is positive.
class Shape {
 public:
  Shape() = default;

  Shape(std::initializer_list<std::size_t> extents) {
    assign(extents.begin(), extents.end());
  }

  explicit Shape(std::span<const std::size_t> extents) {
    assign(extents.begin(), extents.end());
  }

  std::size_t rank() const { return rank_; }
  std::size_t operator[](std::size_t axis) const { return extents_[axis]; }

  std::size_t size() const {
    if (rank_ == 0) return 0;
    std::size_t n = 1;
    for (std::size_t i = 0; i < rank_; ++i) n *= extents_[i];
    return n;
  }

  bool operator==(const Shape& other) const {
    if (rank_ != other.rank_) return false;
    for (std::size_t i = 0; i < rank_; ++i)
      if (extents_[i] != other.extents_[i]) return false;
    return true;
  }

  std::string str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < rank_; ++i) {
      if (i) s += "x";
      s += std::to_string(extents_[i]);
    }
    return s + "]";
  }

 private:
  template <typename It>
  void assign(It first, It last) {
    const auto n = static_cast<std::size_t>(std::distance(first, last));
    if (n < 1 || n > 3)
      throw DimensionError("tensor rank must be 1-3, got " + std::to_string(n));
    for (std::size_t i = 0; first != last; ++first, ++i) {
      if (*first == 0) throw DimensionError("tensor extents must be positive");
      extents_[i] = *first;
    }
    rank_ = n;
  }

  std::array<std::size_t, 3> extents_{};
  std::size_t rank_ = 0;
};

// Dense row-major array. Rank-1 tensors behave as column vectors (n x 1) in
// every matrix-shaped operation. A default-constructed tensor is empty and
// only serves as a placeholder.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{0})
      : shape_(shape), data_(shape.size(), fill) {}

  Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.size())
      throw DimensionError("buffer of " + std::to_string(data_.size()) +
                           " elements does not fill shape " + shape_.str());
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, std::initializer_list<T> values) {
    return Tensor(Shape{rows, cols}, std::vector<T>(values));
  }

  static Tensor vector(std::initializer_list<T> values) {
    return Tensor(Shape{values.size()}, std::vector<T>(values));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.rank(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t rows() const { return shape_[0]; }
  std::size_t cols() const { return shape_.rank() == 1 ? 1 : shape_[1]; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  // Element type conversion (e.g. double test fixtures into float models).
  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

 private:
  Shape shape_;
  std::vector<T> data_;
};

// Per-token validity of a right-padded sequence.
using ValidMask = std::vector<bool>;

inline ValidMask all_valid(std::size_t length) { return ValidMask(length, true); }

inline std::size_t count_valid(const ValidMask& valid) {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
}

// Boolean matrix of permitted entries for softmax_columns. Entry (i, j) allows
// position i to contribute to output column j.
class AttentionMask {
 public:
  AttentionMask() = default;
  AttentionMask(std::size_t rows, std::size_t cols, bool fill = true)
      : rows_(rows), cols_(cols), allowed_(rows * cols, fill ? 1 : 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  bool operator()(std::size_t i, std::size_t j) const { return allowed_[i * cols_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool allowed) { allowed_[i * cols_ + j] = allowed ? 1 : 0; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> allowed_;
};

}  // namespace ggsa
