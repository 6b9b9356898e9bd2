#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "mpqr/error.hpp"
#include "mpqr/half.hpp"

namespace mpqr {

using index_t = std::size_t;

/// Non-owning column-major window into a matrix. `T` may be const-qualified.
/// Element (i, j) lives at data[i + j * ld].
template <class T>
class MatrixView {
 public:
  using value_type = std::remove_const_t<T>;

  MatrixView() = default;
  MatrixView(T* data, index_t rows, index_t cols, index_t ld) noexcept
      : data_(data), rows_(rows), cols_(cols), ld_(ld) {}

  // MatrixView<T> -> MatrixView<const T>
  template <class U>
    requires(std::is_const_v<T> && std::is_same_v<const U, T>)
  MatrixView(MatrixView<U> other) noexcept
      : data_(other.data()), rows_(other.rows()), cols_(other.cols()), ld_(other.ld()) {}

  index_t rows() const noexcept { return rows_; }
  index_t cols() const noexcept { return cols_; }
  index_t ld() const noexcept { return ld_; }
  T* data() const noexcept { return data_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  T& operator()(index_t i, index_t j) const noexcept {
    assert(i < rows_ && j < cols_);
    return data_[i + j * ld_];
  }

  std::span<T> col(index_t j) const noexcept { return {data_ + j * ld_, rows_}; }

  MatrixView block(index_t r0, index_t c0, index_t nr, index_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) {
      throw DimensionError("view block out of bounds");
    }
    return MatrixView(data_ + r0 + c0 * ld_, nr, nc, ld_);
  }
  MatrixView cols_range(index_t c0, index_t nc) const { return block(0, c0, rows_, nc); }
  MatrixView rows_range(index_t r0, index_t nr) const { return block(r0, 0, nr, cols_); }

 private:
  T* data_ = nullptr;
  index_t rows_ = 0;
  index_t cols_ = 0;
  index_t ld_ = 0;
};

template <class T>
using ConstView = MatrixView<const T>;

/// Owning dense column-major matrix. The storage precision is the scalar type.
template <class T>
class Matrix {
 public:
  using value_type = T;
  static constexpr Precision precision = precision_of_v<T>;

  Matrix() = default;
  Matrix(index_t rows, index_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  Matrix(index_t rows, index_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw DimensionError("matrix payload size mismatch");
  }

  static Matrix identity(index_t rows, index_t cols) {
    Matrix m(rows, cols);
    for (index_t k = 0; k < std::min(rows, cols); ++k) m(k, k) = scalar_cast<T>(1.0);
    return m;
  }
  static Matrix identity(index_t n) { return identity(n, n); }

  /// Copies any view, converting the scalar type element by element.
  template <class U>
  static Matrix from(MatrixView<U> src) {
    Matrix m(src.rows(), src.cols());
    for (index_t j = 0; j < src.cols(); ++j)
      for (index_t i = 0; i < src.rows(); ++i) m(i, j) = scalar_cast<T>(src(i, j));
    return m;
  }
  template <class U>
  static Matrix from(const Matrix<U>& src) {
    return from(src.view());
  }

  index_t rows() const noexcept { return rows_; }
  index_t cols() const noexcept { return cols_; }
  index_t size() const noexcept { return data_.size(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  T& operator()(index_t i, index_t j) noexcept {
    assert(i < rows_ && j < cols_);
    return data_[i + j * rows_];
  }
  const T& operator()(index_t i, index_t j) const noexcept {
    assert(i < rows_ && j < cols_);
    return data_[i + j * rows_];
  }

  std::span<T> col(index_t j) noexcept { return {data() + j * rows_, rows_}; }
  std::span<const T> col(index_t j) const noexcept { return {data() + j * rows_, rows_}; }

  MatrixView<T> view() noexcept { return {data(), rows_, cols_, rows_}; }
  ConstView<T> view() const noexcept { return {data(), rows_, cols_, rows_}; }
  MatrixView<T> view(index_t r0, index_t c0, index_t nr, index_t nc) {
    return view().block(r0, c0, nr, nc);
  }
  ConstView<T> view(index_t r0, index_t c0, index_t nr, index_t nc) const {
    return view().block(r0, c0, nr, nc);
  }

  operator MatrixView<T>() noexcept { return view(); }
  operator ConstView<T>() const noexcept { return view(); }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  index_t rows_ = 0;
  index_t cols_ = 0;
  std::vector<T> data_;
};

/// Column vector view over contiguous storage.
template <class T>
MatrixView<T> as_column(std::span<T> v) noexcept {
  return MatrixView<T>(v.data(), v.size(), 1, std::max<index_t>(v.size(), 1));
}

template <class Dst, class Src>
void copy(MatrixView<Src> src, MatrixView<Dst> dst) {
  if (src.rows() != dst.rows() || src.cols() != dst.cols()) throw DimensionError("copy shape mismatch");
  for (index_t j = 0; j < src.cols(); ++j)
    for (index_t i = 0; i < src.rows(); ++i) dst(i, j) = scalar_cast<Dst>(src(i, j));
}

template <class T>
Matrix<std::remove_const_t<T>> transpose(MatrixView<T> a) {
  Matrix<std::remove_const_t<T>> t(a.cols(), a.rows());
  for (index_t j = 0; j < a.cols(); ++j)
    for (index_t i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
  return t;
}

template <class T>
bool all_finite(MatrixView<T> a) noexcept {
  for (index_t j = 0; j < a.cols(); ++j)
    for (index_t i = 0; i < a.rows(); ++i) {
      if constexpr (std::is_same_v<std::remove_const_t<T>, Half>) {
        if (!is_finite(a(i, j))) return false;
      } else if (!std::isfinite(a(i, j))) {
        return false;
      }
    }
  return true;
}

inline std::string shape_string(index_t r, index_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace mpqr
