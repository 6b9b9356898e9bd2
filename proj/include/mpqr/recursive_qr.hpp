#pragma once

// Recursive QR factorizations.
//
// rmgsqr splits the columns in two, factorizes the left half, projects it out
// of the right half with two large matrix products, and recurses on the
// updated right half:
//
//   [A1 | A2] = [Q1 | Q2] [R11 R12; 0 R22],  R12 = Q1' A2,  A2 - Q1 R12 = Q2 R22.
//
// The two products run in the configured GEMM mode (emulated TensorCore by
// default); everything else stays in the working precision T. Below the
// cutoff width the CAQR panel takes over, sweeping 32-column panels.
//
// rhouqr is the recursive Householder counterpart with compact-WY factors
// Q = I - Y T Y'. It is a reference path and never uses binary16.

#include <cmath>
#include <type_traits>

#include "mpqr/error.hpp"
#include "mpqr/gemm.hpp"
#include "mpqr/kernels.hpp"
#include "mpqr/matrix.hpp"
#include "mpqr/panel_qr.hpp"

namespace mpqr {

struct QrConfig {
  /// Widths at or below this go to the panel path.
  index_t cutoff = 128;
  GemmMode gemm_mode{GemmVariant::EmulatedTensorCore, nullptr};
  PanelConfig panel{};

  void validate() const {
    panel.validate();
    if (cutoff < panel.panel_cols || cutoff % panel.panel_cols != 0) {
      throw Error("cutoff must be a positive multiple of the panel width");
    }
  }
};

/// Implicit-Q Householder factors: Q = I - Y T Y', Y unit lower trapezoidal.
template <class T>
struct HouseholderFactors {
  Matrix<T> Y;
  Matrix<T> T_;
  Matrix<T> R;
};

namespace detail {

/// Left width of a column split: the larger half, rounded up to whole panels.
inline index_t split_columns(index_t n, index_t panel) {
  const index_t left = (n + 2 * panel - 1) / (2 * panel) * panel;
  return left < n ? left : n - panel;
}

template <class T>
void check_factorizable(MatrixView<T> a) {
  if (a.cols() == 0 || a.rows() < a.cols()) {
    throw DimensionError("QR needs m >= n >= 1, got " + shape_string(a.rows(), a.cols()));
  }
  if (!all_finite(a)) throw NonFiniteError("QR input contains non-finite entries");
}

template <class T>
void panel_sweep(MatrixView<T> a, MatrixView<T> r, const QrConfig& cfg, index_t column_offset) {
  const index_t n = a.cols();
  const index_t w = cfg.panel.panel_cols;
  const GemmMode native = cfg.gemm_mode.with_variant(native_variant<T>());
  for (index_t p0 = 0; p0 < n; p0 += w) {
    const index_t pw = std::min(w, n - p0);
    const MatrixView<T> panel = a.cols_range(p0, pw);
    QrFactors<T> f = caqr_panel(ConstView<T>(panel), cfg.panel, cfg.gemm_mode, column_offset + p0);
    copy(f.Q.view(), panel);
    copy(f.R.view(), r.block(p0, p0, pw, pw));
    const index_t rest = n - p0 - pw;
    if (rest == 0) continue;
    const MatrixView<T> trailing = a.cols_range(p0 + pw, rest);
    const MatrixView<T> r_row = r.block(p0, p0 + pw, pw, rest);
    tc_gemm(Trans::Yes, Trans::No, 1.0, ConstView<T>(panel), ConstView<T>(trailing), 0.0, r_row, native);
    tc_gemm(Trans::No, Trans::No, -1.0, ConstView<T>(panel), ConstView<T>(r_row), 1.0, trailing, native);
  }
}

template <class T>
void rmgs(MatrixView<T> a, MatrixView<T> r, const QrConfig& cfg, index_t column_offset) {
  const index_t n = a.cols();
  if (n <= cfg.cutoff) {
    panel_sweep(a, r, cfg, column_offset);
    return;
  }
  const index_t n1 = split_columns(n, cfg.panel.panel_cols);
  const index_t n2 = n - n1;
  const MatrixView<T> left = a.cols_range(0, n1);
  const MatrixView<T> right = a.cols_range(n1, n2);
  const MatrixView<T> r12 = r.block(0, n1, n1, n2);

  rmgs(left, r.block(0, 0, n1, n1), cfg, column_offset);
  tc_gemm(Trans::Yes, Trans::No, 1.0, ConstView<T>(left), ConstView<T>(right), 0.0, r12, cfg.gemm_mode);
  tc_gemm(Trans::No, Trans::No, -1.0, ConstView<T>(left), ConstView<T>(r12), 1.0, right, cfg.gemm_mode);
  rmgs(right, r.block(n1, n1, n2, n2), cfg, column_offset + n1);
}

}  // namespace detail

/// Recursive MGS QR. Q and R are produced in T; only the two recursion-level
/// products go through cfg.gemm_mode.
template <class V, class S = std::remove_const_t<V>>
QrFactors<S> rmgsqr(MatrixView<V> a, const QrConfig& cfg = {}) {
  static_assert(std::is_floating_point_v<S>, "rmgsqr works in binary32 or binary64");
  cfg.validate();
  detail::check_factorizable(a);
  QrFactors<S> f{Matrix<S>::from(a), Matrix<S>(a.cols(), a.cols())};
  detail::rmgs(f.Q.view(), f.R.view(), cfg, 0);
  return f;
}

template <class T>
QrFactors<T> rmgsqr(const Matrix<T>& a, const QrConfig& cfg = {}) {
  return rmgsqr(a.view(), cfg);
}

namespace detail {

// Structured products for the Householder path; all counted explicitly.

/// W <- L' B for L (k x k) unit lower triangular, B k x n. W must not alias B.
template <class T>
void unit_lower_transpose_times(ConstView<T> l, ConstView<T> b, MatrixView<T> w) {
  const index_t k = l.rows();
  for (index_t j = 0; j < b.cols(); ++j)
    for (index_t i = 0; i < k; ++i) {
      T s = b(i, j);
      for (index_t p = i + 1; p < k; ++p) s += l(p, i) * b(p, j);
      w(i, j) = s;
    }
}

/// B <- U' B in place, U upper triangular (so U' is lower).
template <class T>
void upper_transpose_times_inplace(ConstView<T> u, MatrixView<T> b) {
  const index_t k = u.rows();
  for (index_t j = 0; j < b.cols(); ++j)
    for (index_t i = k; i-- > 0;) {
      T s = T(0);
      for (index_t p = 0; p <= i; ++p) s += u(p, i) * b(p, j);
      b(i, j) = s;
    }
}

/// B <- U B in place, U upper triangular.
template <class T>
void upper_times_inplace(ConstView<T> u, MatrixView<T> b) {
  const index_t k = u.rows();
  for (index_t j = 0; j < b.cols(); ++j)
    for (index_t i = 0; i < k; ++i) {
      T s = T(0);
      for (index_t p = i; p < k; ++p) s += u(i, p) * b(p, j);
      b(i, j) = s;
    }
}

/// B <- B U in place, U upper triangular.
template <class T>
void times_upper_inplace(MatrixView<T> b, ConstView<T> u) {
  const index_t k = u.rows();
  for (index_t i = 0; i < b.rows(); ++i)
    for (index_t j = k; j-- > 0;) {
      T s = T(0);
      for (index_t p = 0; p <= j; ++p) s += b(i, p) * u(p, j);
      b(i, j) = s;
    }
}

/// B <- B - L W for L (k x k) unit lower triangular.
template <class T>
void subtract_unit_lower_times(ConstView<T> l, ConstView<T> w, MatrixView<T> b) {
  const index_t k = l.rows();
  for (index_t j = 0; j < b.cols(); ++j)
    for (index_t i = 0; i < k; ++i) {
      T s = w(i, j);
      for (index_t p = 0; p < i; ++p) s += l(i, p) * w(p, j);
      b(i, j) -= s;
    }
}

/// X <- A' L for A (k x n... rows of A matched to L), L unit lower triangular (k x k).
template <class T>
void transpose_times_unit_lower(ConstView<T> a, ConstView<T> l, MatrixView<T> x) {
  const index_t k = l.rows();
  for (index_t j = 0; j < k; ++j)
    for (index_t i = 0; i < a.cols(); ++i) {
      T s = a(j, i);
      for (index_t p = j + 1; p < k; ++p) s += a(p, i) * l(p, j);
      x(i, j) = s;
    }
}

/// Unblocked Householder (reflectors H = I - tau v v', v(0) = 1) followed by
/// the forward column-wise T of H_1 ... H_n = I - Y T Y'.
template <class T>
void householder_panel(MatrixView<T> a, MatrixView<T> y, MatrixView<T> t, MatrixView<T> r, const GemmMode& mode) {
  const index_t m = a.rows();
  const index_t n = a.cols();
  for (index_t k = 0; k < n; ++k) {
    const index_t len = m - k;
    const T alpha = a(k, k);
    const double xnorm = norm2(std::span<const T>(a.col(k).subspan(k + 1)));
    T tau = T(0);
    T beta = alpha;
    y(k, k) = T(1);
    if (xnorm != 0.0) {
      beta = static_cast<T>(-std::copysign(std::hypot(static_cast<double>(alpha), xnorm), static_cast<double>(alpha)));
      tau = (beta - alpha) / beta;
      const T scale = T(1) / (alpha - beta);
      for (index_t i = k + 1; i < m; ++i) y(i, k) = a(i, k) * scale;
    }
    r(k, k) = beta;
    t(k, k) = tau;
    for (index_t j = k + 1; j < n; ++j) {
      if (tau == T(0)) break;
      T w = a(k, j);
      for (index_t i = k + 1; i < m; ++i) w += y(i, k) * a(i, j);
      w *= tau;
      a(k, j) -= w;
      for (index_t i = k + 1; i < m; ++i) a(i, j) -= y(i, k) * w;
    }
    for (index_t j = k + 1; j < n; ++j) r(k, j) = a(k, j);
    mode.count(3ull * len + 4ull * len * (n - k - 1));
  }
  // T(0:k, k) = -tau_k T(0:k, 0:k) Y(:, 0:k)' y_k
  for (index_t k = 1; k < n; ++k) {
    const T tau = t(k, k);
    for (index_t i = 0; i < k; ++i) {
      T s = T(0);
      for (index_t p = k; p < m; ++p) s += y(p, i) * y(p, k);
      t(i, k) = s;
    }
    for (index_t i = 0; i < k; ++i) {
      T s = T(0);
      for (index_t p = i; p < k; ++p) s += t(i, p) * t(p, k);
      t(i, k) = -tau * s;
    }
    mode.count(2ull * (m - k) * k + 1ull * k * k, FlopKind::WyAssembly);
  }
}

template <class T>
void rhou(MatrixView<T> a, MatrixView<T> y, MatrixView<T> t, MatrixView<T> r, const QrConfig& cfg) {
  const index_t m = a.rows();
  const index_t n = a.cols();
  const GemmMode counting = cfg.gemm_mode.with_variant(native_variant<T>());
  if (n <= cfg.cutoff) {
    householder_panel(a, y, t, r, counting);
    return;
  }
  const index_t n1 = split_columns(n, cfg.panel.panel_cols);
  const index_t n2 = n - n1;
  rhou(a.cols_range(0, n1), y.cols_range(0, n1), t.block(0, 0, n1, n1), r.block(0, 0, n1, n1), cfg);

  const ConstView<T> y1_top = y.block(0, 0, n1, n1);
  const ConstView<T> y1_bot = y.block(n1, 0, m - n1, n1);
  const MatrixView<T> a2 = a.cols_range(n1, n2);
  const MatrixView<T> a2_top = a2.rows_range(0, n1);
  const MatrixView<T> a2_bot = a2.rows_range(n1, m - n1);

  // B = A2 - (Y1 T1') (Y1' A2)
  Matrix<T> w(n1, n2);
  unit_lower_transpose_times<T>(y1_top, ConstView<T>(a2_top), w.view());
  counting.count(1ull * n1 * n1 * n2);
  tc_gemm(Trans::Yes, Trans::No, 1.0, y1_bot, ConstView<T>(a2_bot), 1.0, w.view(), counting);
  upper_transpose_times_inplace<T>(ConstView<T>(t.block(0, 0, n1, n1)), w.view());
  counting.count(1ull * n1 * n1 * n2);
  subtract_unit_lower_times<T>(y1_top, w.view(), a2_top);
  counting.count(1ull * n1 * n1 * n2);
  tc_gemm(Trans::No, Trans::No, -1.0, y1_bot, w.view(), 1.0, a2_bot, counting);

  copy(ConstView<T>(a2_top), r.block(0, n1, n1, n2));
  rhou(a2_bot.cols_range(0, n2), y.block(n1, n1, m - n1, n2), t.block(n1, n1, n2, n2), r.block(n1, n1, n2, n2), cfg);

  // T12 = -T1 (Y1' [0; Y2]) T2, with only rows n1: of Y1 meeting Y2
  const ConstView<T> y2_top = y.block(n1, n1, n2, n2);
  const ConstView<T> y2_bot = y.block(n1 + n2, n1, m - n1 - n2, n2);
  const MatrixView<T> t12 = t.block(0, n1, n1, n2);
  transpose_times_unit_lower<T>(ConstView<T>(y.block(n1, 0, n2, n1)), y2_top, t12);
  counting.count(1ull * n2 * n2 * n1, FlopKind::WyAssembly);
  tc_gemm(Trans::Yes, Trans::No, 1.0, ConstView<T>(y.block(n1 + n2, 0, m - n1 - n2, n1)), y2_bot, 1.0, t12,
          GemmMode{native_variant<T>(), nullptr});
  counting.count(2ull * (m - n1 - n2) * n1 * n2, FlopKind::WyAssembly);
  upper_times_inplace<T>(ConstView<T>(t.block(0, 0, n1, n1)), t12);
  times_upper_inplace<T>(t12, ConstView<T>(t.block(n1, n1, n2, n2)));
  counting.count(1ull * n1 * n1 * n2 + 1ull * n1 * n2 * n2, FlopKind::WyAssembly);
  for (index_t j = 0; j < n2; ++j)
    for (index_t i = 0; i < n1; ++i) t12(i, j) = -t12(i, j);
}

}  // namespace detail

/// Second factorization of Q: returns (Q2, R2 * R) with Q2 R2 = rmgsqr(Q).
template <class T>
QrFactors<T> reorthogonalize(const QrFactors<T>& f, const QrConfig& cfg = {}) {
  QrFactors<T> second = rmgsqr(f.Q.view(), cfg);
  // Product of two upper triangular factors, touching only the upper triangle.
  const index_t n = f.R.cols();
  Matrix<T> r(n, n);
  for (index_t j = 0; j < n; ++j)
    for (index_t i = 0; i <= j; ++i) {
      T s = T(0);
      for (index_t p = i; p <= j; ++p) s += second.R(i, p) * f.R(p, j);
      r(i, j) = s;
    }
  cfg.gemm_mode.count(std::uint64_t{n} * (n + 1) * (n + 2) / 3);
  return {std::move(second.Q), std::move(r)};
}

/// Recursive Householder QR in the working precision T (binary32 or binary64).
/// Factorization flops are counted as FlopKind::Factorization, forming T as
/// FlopKind::WyAssembly.
template <class V, class S = std::remove_const_t<V>>
HouseholderFactors<S> rhouqr(MatrixView<V> a, const QrConfig& cfg = {}) {
  static_assert(std::is_floating_point_v<S>, "rhouqr works in binary32 or binary64");
  cfg.validate();
  detail::check_factorizable(a);
  const index_t m = a.rows();
  const index_t n = a.cols();
  Matrix<S> work = Matrix<S>::from(a);
  HouseholderFactors<S> f{Matrix<S>(m, n), Matrix<S>(n, n), Matrix<S>(n, n)};
  detail::rhou(work.view(), f.Y.view(), f.T_.view(), f.R.view(), cfg);
  return f;
}

template <class T>
HouseholderFactors<T> rhouqr(const Matrix<T>& a, const QrConfig& cfg = {}) {
  return rhouqr(a.view(), cfg);
}

/// First n columns of Q = I - Y T Y', formed explicitly.
template <class T>
Matrix<T> explicit_q(const HouseholderFactors<T>& f) {
  const index_t m = f.Y.rows();
  const index_t n = f.Y.cols();
  const GemmMode plain{native_variant<T>(), nullptr};
  // M = T * Y(0:n, :)'
  Matrix<T> mt(n, n);
  tc_gemm(Trans::No, Trans::Yes, 1.0, f.T_.view(), f.Y.view(0, 0, n, n), 0.0, mt.view(), plain);
  Matrix<T> q = Matrix<T>::identity(m, n);
  tc_gemm(Trans::No, Trans::No, -1.0, f.Y.view(), mt.view(), 1.0, q.view(), plain);
  return q;
}

}  // namespace mpqr
