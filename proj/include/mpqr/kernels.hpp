#pragma once

#include <cmath>
#include <span>
#include <type_traits>

#include "mpqr/error.hpp"
#include "mpqr/matrix.hpp"

namespace mpqr {

/// Euclidean norm, accumulated in binary64 whatever the storage type.
template <class T>
double norm2(std::span<T> v) noexcept {
  double sum = 0.0;
  for (const auto& x : v) {
    const double d = scalar_cast<double>(x);
    sum += d * d;
  }
  return std::sqrt(sum);
}

template <class T>
double norm2(const std::vector<T>& v) noexcept {
  return norm2(std::span<const T>(v));
}

/// Inner product accumulated in binary64.
template <class T, class U>
double dot(std::span<T> a, std::span<U> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double sum = 0.0;
  for (index_t i = 0; i < a.size(); ++i) sum += scalar_cast<double>(a[i]) * scalar_cast<double>(b[i]);
  return sum;
}

template <class T>
double frobenius_norm(MatrixView<T> a) noexcept {
  double sum = 0.0;
  for (index_t j = 0; j < a.cols(); ++j)
    for (index_t i = 0; i < a.rows(); ++i) {
      const double d = scalar_cast<double>(a(i, j));
      sum += d * d;
    }
  return std::sqrt(sum);
}

template <class T>
double max_abs(MatrixView<T> a) noexcept {
  double m = 0.0;
  for (index_t j = 0; j < a.cols(); ++j)
    for (index_t i = 0; i < a.rows(); ++i) m = std::max(m, std::abs(scalar_cast<double>(a(i, j))));
  return m;
}

/// In place B <- R^{-1} B (or R^{-T} B when `transpose`), R upper triangular.
/// Arithmetic runs in the precision of B.
template <class TR, class TB>
void trsm_upper_inplace(MatrixView<TR> r, MatrixView<TB> b, bool transpose) {
  using W = std::remove_const_t<TB>;
  const index_t n = r.rows();
  if (r.cols() != n || b.rows() != n) {
    throw DimensionError("trsm_upper: R is " + shape_string(r.rows(), r.cols()) + ", B is " +
                         shape_string(b.rows(), b.cols()));
  }
  for (index_t i = 0; i < n; ++i) {
    if (scalar_cast<W>(r(i, i)) == W(0)) throw SingularTriangularError(i);
  }
  for (index_t c = 0; c < b.cols(); ++c) {
    const std::span<TB> x = b.col(c);
    if (!transpose) {
      // back substitution, column oriented
      for (index_t jj = n; jj-- > 0;) {
        x[jj] /= scalar_cast<W>(r(jj, jj));
        const W xj = x[jj];
        for (index_t i = 0; i < jj; ++i) x[i] -= scalar_cast<W>(r(i, jj)) * xj;
      }
    } else {
      // forward substitution with R^T: row i of R^T is column i of R
      for (index_t i = 0; i < n; ++i) {
        W s = x[i];
        for (index_t p = 0; p < i; ++p) s -= scalar_cast<W>(r(p, i)) * x[p];
        x[i] = s / scalar_cast<W>(r(i, i));
      }
    }
  }
}

/// Returns R^{-1} B (or R^{-T} B).
template <class TR, class TB>
Matrix<std::remove_const_t<TB>> trsm_upper(MatrixView<TR> r, MatrixView<TB> b, bool transpose = false) {
  auto x = Matrix<std::remove_const_t<TB>>::from(b);
  trsm_upper_inplace(r, x.view(), transpose);
  return x;
}

/// Vector form of trsm_upper used by the iterative solvers.
template <class TR>
void trsv_upper_inplace(MatrixView<TR> r, std::span<double> x, bool transpose) {
  trsm_upper_inplace(r, as_column(x), transpose);
}

}  // namespace mpqr
