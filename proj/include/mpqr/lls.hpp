#pragma once

// Linear least-squares solvers: normal equations, direct QR, and CGLS with
// an R factor from rmgsqr as right preconditioner.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "mpqr/error.hpp"
#include "mpqr/gemm.hpp"
#include "mpqr/kernels.hpp"
#include "mpqr/matrix.hpp"
#include "mpqr/recursive_qr.hpp"

namespace mpqr {

struct CglsConfig {
  /// Stop once ||s_k|| / ||s_0|| <= tolerance, s the preconditioned normal residual.
  double tolerance = 1e-12;
  index_t max_iterations = 200;

  void validate() const {
    if (!(tolerance > 0.0)) throw Error("CGLS tolerance must be positive");
    if (max_iterations < 1) throw Error("CGLS max_iterations must be >= 1");
  }
};

struct CglsReport {
  /// Final iterate when converged, otherwise the iterate with the smallest ||s_k||.
  std::vector<double> x;
  index_t iterations = 0;
  /// ||s_k|| / ||s_0|| after each iteration.
  std::vector<double> history;
  bool converged = false;
};

namespace detail {

inline void check_lls_shapes(index_t m, index_t n, std::size_t b_len) {
  if (n == 0 || m < n) throw DimensionError("least squares needs m >= n >= 1, got " + shape_string(m, n));
  if (b_len != m) throw DimensionError("right-hand side length does not match A");
}

/// Power-iteration estimate of ||R||_2 * ||R^{-1}||_2 for upper triangular R.
/// Both factors are approached from below, so the estimate never overshoots.
inline double triangular_condition_estimate(ConstView<double> r, int iterations = 20) {
  const index_t n = r.rows();
  auto power = [&](auto&& apply) {
    std::vector<double> v(n);
    for (index_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i + 1));
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
      const double nv = norm2(v);
      if (!(nv > 0.0) || !std::isfinite(nv)) break;
      for (double& x : v) x /= nv;
      apply(v);
      lambda = norm2(v);
    }
    return std::sqrt(lambda);
  };
  const double norm_r = power([&](std::vector<double>& v) {
    std::vector<double> w(n, 0.0);
    for (index_t j = 0; j < n; ++j)
      for (index_t i = 0; i <= j; ++i) w[i] += r(i, j) * v[j];
    for (index_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (index_t i = 0; i <= j; ++i) s += r(i, j) * w[i];
      v[j] = s;
    }
  });
  const double norm_rinv = power([&](std::vector<double>& v) {
    trsv_upper_inplace(r, std::span<double>(v), true);
    trsv_upper_inplace(r, std::span<double>(v), false);
  });
  return norm_r * norm_rinv;
}

}  // namespace detail

/// x = (A'A)^{-1} A'b via Cholesky, everything in binary64. A pivot at or below
/// n * eps * max(diag(A'A)) is a breakdown. A factor that completes but leaves
/// cond(A'A) >= 1 / (n * eps) is just as unusable; both are reported as
/// IllConditionedError.
inline std::vector<double> solve_normal_equations(ConstView<double> a, std::span<const double> b) {
  const index_t m = a.rows();
  const index_t n = a.cols();
  detail::check_lls_shapes(m, n, b.size());
  const GemmMode fp64{GemmVariant::Fp64, nullptr};
  Matrix<double> g(n, n);
  tc_gemm(Trans::Yes, Trans::No, 1.0, a, a, 0.0, g.view(), fp64);
  std::vector<double> x = matvec_transposed(a, b, fp64);

  double max_diag = 0.0;
  for (index_t i = 0; i < n; ++i) max_diag = std::max(max_diag, g(i, i));
  const double floor = static_cast<double>(n) * std::numeric_limits<double>::epsilon() * max_diag;

  // Upper Cholesky G = U'U stored in the upper triangle of g.
  for (index_t j = 0; j < n; ++j) {
    for (index_t i = 0; i < j; ++i) {
      double s = g(i, j);
      for (index_t p = 0; p < i; ++p) s -= g(p, i) * g(p, j);
      g(i, j) = s / g(i, i);
    }
    double d = g(j, j);
    for (index_t p = 0; p < j; ++p) d -= g(p, j) * g(p, j);
    if (!(d > floor)) {
      throw IllConditionedError("normal equations: Cholesky breakdown at pivot " + std::to_string(j));
    }
    g(j, j) = std::sqrt(d);
  }
  for (index_t j = 0; j < n; ++j)
    for (index_t i = j + 1; i < n; ++i) g(i, j) = 0.0;
  const double cond_u = detail::triangular_condition_estimate(ConstView<double>(g.view()));
  if (cond_u * cond_u * static_cast<double>(n) * std::numeric_limits<double>::epsilon() >= 1.0) {
    throw IllConditionedError("normal equations: A'A is numerically singular");
  }
  trsv_upper_inplace(ConstView<double>(g.view()), std::span<double>(x), true);
  trsv_upper_inplace(ConstView<double>(g.view()), std::span<double>(x), false);
  return x;
}

/// x = R^{-1} (Q' b) from rmgsqr in working precision T; Q'b and the
/// triangular solve also run in T.
template <class T>
std::vector<double> solve_direct_qr_in(ConstView<double> a, std::span<const double> b, const QrConfig& cfg) {
  detail::check_lls_shapes(a.rows(), a.cols(), b.size());
  const Matrix<T> at = Matrix<T>::from(a);
  const QrFactors<T> f = rmgsqr(at.view(), cfg);
  std::vector<T> bt(b.begin(), b.end());
  std::vector<T> qtb(a.cols());
  tc_gemm(Trans::Yes, Trans::No, 1.0, f.Q.view(), ConstView<T>(as_column(std::span<const T>(bt))), 0.0,
          as_column(std::span<T>(qtb)), GemmMode{native_variant<T>(), nullptr});
  trsm_upper_inplace(f.R.view(), as_column(std::span<T>(qtb)), false);
  return {qtb.begin(), qtb.end()};
}

/// Direct QR solve. The working precision follows the GEMM mode: binary64 for
/// Fp64, binary32 otherwise.
inline std::vector<double> solve_direct_qr(ConstView<double> a, std::span<const double> b, const QrConfig& cfg = {}) {
  if (cfg.gemm_mode.variant == GemmVariant::Fp64) return solve_direct_qr_in<double>(a, b, cfg);
  return solve_direct_qr_in<float>(a, b, cfg);
}

/// Direct solve with a Householder QR in binary32 or binary64 (no binary16):
/// c = Q'b applied through the reflectors, then R x = c(0:n).
template <class T>
std::vector<double> solve_direct_householder(ConstView<double> a, std::span<const double> b) {
  detail::check_lls_shapes(a.rows(), a.cols(), b.size());
  const GemmMode plain{native_variant<T>(), nullptr};
  QrConfig cfg;
  cfg.gemm_mode = plain;
  const Matrix<T> at = Matrix<T>::from(a);
  const HouseholderFactors<T> f = rhouqr(at.view(), cfg);
  const index_t n = a.cols();
  // Q'b = b - Y T' Y' b
  std::vector<T> c(b.begin(), b.end());
  std::vector<T> w(n);
  std::vector<T> tw(n);
  tc_gemm(Trans::Yes, Trans::No, 1.0, f.Y.view(), ConstView<T>(as_column(std::span<const T>(c))), 0.0,
          as_column(std::span<T>(w)), plain);
  tc_gemm(Trans::Yes, Trans::No, 1.0, f.T_.view(), ConstView<T>(as_column(std::span<const T>(w))), 0.0,
          as_column(std::span<T>(tw)), plain);
  tc_gemm(Trans::No, Trans::No, -1.0, f.Y.view(), ConstView<T>(as_column(std::span<const T>(tw))), 1.0,
          as_column(std::span<T>(c)), plain);
  c.resize(n);
  trsm_upper_inplace(f.R.view(), as_column(std::span<T>(c)), false);
  return {c.begin(), c.end()};
}

/// CGLS on min ||A R^{-1} y - b|| with x = R^{-1} y, all vector arithmetic in
/// binary64 and x0 = 0. Without `r` this is plain CGLS.
inline CglsReport cgls(ConstView<double> a, std::span<const double> b, const Matrix<double>* r,
                       const CglsConfig& cfg) {
  cfg.validate();
  const index_t m = a.rows();
  const index_t n = a.cols();
  detail::check_lls_shapes(m, n, b.size());
  if (r != nullptr && (r->rows() != n || r->cols() != n)) throw DimensionError("preconditioner must be n x n");
  const GemmMode fp64{GemmVariant::Fp64, nullptr};

  auto apply_inverse = [&](std::vector<double>& v, bool transpose) {
    if (r != nullptr) trsv_upper_inplace(r->view(), std::span<double>(v), transpose);
  };

  CglsReport report;
  report.x.assign(n, 0.0);
  std::vector<double> res(b.begin(), b.end());
  std::vector<double> s = matvec_transposed(a, std::span<const double>(res), fp64);
  apply_inverse(s, true);
  std::vector<double> p = s;
  const double norms0 = norm2(s);
  if (!std::isfinite(norms0)) throw NonFiniteError("CGLS: non-finite initial residual");
  if (norms0 == 0.0) {
    report.converged = true;
    return report;
  }
  double gamma = norms0 * norms0;
  // Past attainable accuracy the recurrences drift away again, so an
  // unconverged run returns its best iterate.
  std::vector<double> best_x = report.x;
  double best = norms0;

  for (index_t k = 1; k <= cfg.max_iterations; ++k) {
    std::vector<double> t = p;
    apply_inverse(t, false);
    const std::vector<double> q = matvec(a, std::span<const double>(t), fp64);
    const double qn = norm2(q);
    const double delta = qn * qn;
    if (!(delta > 0.0) || !std::isfinite(delta)) break;
    const double alpha = gamma / delta;
    for (index_t i = 0; i < n; ++i) report.x[i] += alpha * t[i];
    for (index_t i = 0; i < m; ++i) res[i] -= alpha * q[i];
    s = matvec_transposed(a, std::span<const double>(res), fp64);
    apply_inverse(s, true);
    const double norms = norm2(s);
    const double gamma1 = gamma;
    gamma = norms * norms;
    const double beta = gamma / gamma1;
    for (index_t i = 0; i < n; ++i) p[i] = s[i] + beta * p[i];

    report.iterations = k;
    report.history.push_back(norms / norms0);
    if (norms / norms0 <= cfg.tolerance) {
      report.converged = true;
      return report;
    }
    if (!std::isfinite(norms)) break;
    if (norms < best) {
      best = norms;
      best_x = report.x;
    }
  }
  report.x = std::move(best_x);
  return report;
}

/// Upper triangular R factor from rmgsqr, widened to binary64. The working
/// precision follows the GEMM mode as in solve_direct_qr.
inline Matrix<double> preconditioner_factor(ConstView<double> a, const QrConfig& cfg) {
  if (cfg.gemm_mode.variant == GemmVariant::Fp64) return rmgsqr(a, cfg).R;
  const Matrix<float> af = Matrix<float>::from(a);
  return Matrix<double>::from(rmgsqr(af.view(), cfg).R);
}

/// Factorizes A once with rmgsqr and runs CGLS right-preconditioned by its R.
inline CglsReport solve_cgls_preconditioned(ConstView<double> a, std::span<const double> b, const QrConfig& qr_cfg = {},
                                            const CglsConfig& cgls_cfg = {}) {
  detail::check_lls_shapes(a.rows(), a.cols(), b.size());
  const Matrix<double> r = preconditioner_factor(a, qr_cfg);
  return cgls(a, b, &r, cgls_cfg);
}

inline CglsReport solve_cgls_plain(ConstView<double> a, std::span<const double> b, const CglsConfig& cfg = {}) {
  return cgls(a, b, nullptr, cfg);
}

}  // namespace mpqr
