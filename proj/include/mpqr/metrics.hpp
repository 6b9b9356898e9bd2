#pragma once

// Accuracy metrics for QR factors and least-squares solutions, plus the
// dense-SVD oracles used to check them. Everything is evaluated in binary64.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mpqr/error.hpp"
#include "mpqr/gemm.hpp"
#include "mpqr/kernels.hpp"
#include "mpqr/matgen.hpp"
#include "mpqr/matrix.hpp"

namespace mpqr {

enum class NormMethod { Auto, DenseSvd, Lanczos };

inline constexpr index_t kDenseSvdLimit = 1024;
inline constexpr index_t kConditionNumberLimit = 2048;

namespace detail {

inline Eigen::MatrixXd to_eigen(ConstView<double> a) {
  Eigen::MatrixXd e(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
  for (index_t j = 0; j < a.cols(); ++j)
    for (index_t i = 0; i < a.rows(); ++i) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
  return e;
}

template <class T>
Matrix<double> widen(MatrixView<T> a) {
  return Matrix<double>::from(a);
}

/// Largest singular value by Golub-Kahan-Lanczos bidiagonalization with full
/// reorthogonalization; at most 200 steps, stops when the estimate moves by
/// less than 1e-8 relative.
inline double lanczos_norm2(ConstView<double> a) {
  const index_t m = a.rows();
  const index_t n = a.cols();
  const GemmMode fp64{GemmVariant::Fp64, nullptr};
  const index_t max_steps = std::min<index_t>({200, m, n});
  const Philox4x32 rng(0x5eed);

  std::vector<std::vector<double>> us;
  std::vector<std::vector<double>> vs;
  std::vector<double> alphas;
  std::vector<double> betas;

  auto reorthogonalize = [](std::vector<double>& w, const std::vector<std::vector<double>>& basis) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) {
        const double c = dot(std::span<const double>(q), std::span<const double>(w));
        for (index_t i = 0; i < w.size(); ++i) w[i] -= c * q[i];
      }
  };

  std::vector<double> v(n);
  for (index_t i = 0; i < n; ++i) v[i] = rng.normal(0, i);
  double nv = norm2(v);
  for (double& x : v) x /= nv;
  vs.push_back(v);

  double estimate = 0.0;
  for (index_t k = 0; k < max_steps; ++k) {
    std::vector<double> u = matvec(a, std::span<const double>(vs.back()), fp64);
    if (!us.empty()) {
      for (index_t i = 0; i < m; ++i) u[i] -= betas.back() * us.back()[i];
    }
    reorthogonalize(u, us);
    const double alpha = norm2(u);
    alphas.push_back(alpha);
    if (alpha == 0.0) break;
    for (double& x : u) x /= alpha;
    us.push_back(u);

    std::vector<double> w = matvec_transposed(a, std::span<const double>(u), fp64);
    for (index_t i = 0; i < n; ++i) w[i] -= alpha * vs.back()[i];
    reorthogonalize(w, vs);
    const double beta = norm2(w);

    // Upper bidiagonal with alphas on the diagonal and betas above it.
    const auto dim = static_cast<Eigen::Index>(alphas.size());
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      b(i, i) = alphas[static_cast<index_t>(i)];
      if (i + 1 < dim) b(i, i + 1) = betas[static_cast<index_t>(i)];
    }
    const double next = Eigen::JacobiSVD<Eigen::MatrixXd>(b).singularValues()(0);
    const bool settled = k > 0 && std::abs(next - estimate) <= 1e-8 * next;
    estimate = next;
    if (settled || beta <= 1e-14 * estimate) break;
    betas.push_back(beta);
    for (double& x : w) x /= beta;
    vs.push_back(std::move(w));
  }
  return estimate;
}

}  // namespace detail

/// Singular values of A in descending order (dense binary64 SVD).
template <class T>
std::vector<double> singular_values_of(MatrixView<T> a) {
  const Matrix<double> d = detail::widen(a);
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(detail::to_eigen(d.view()));
  const Eigen::VectorXd s = svd.singularValues();
  return {s.data(), s.data() + s.size()};
}

/// 2-norm of A. Auto uses a dense SVD when min(m, n) < 1024 and Lanczos above.
template <class T>
double spectral_norm(MatrixView<T> a, NormMethod method = NormMethod::Auto) {
  if (a.empty()) return 0.0;
  if (method == NormMethod::Auto) {
    method = std::min(a.rows(), a.cols()) < kDenseSvdLimit ? NormMethod::DenseSvd : NormMethod::Lanczos;
  }
  if (method == NormMethod::DenseSvd) return singular_values_of(a).front();
  const Matrix<double> d = detail::widen(a);
  return detail::lanczos_norm2(d.view());
}

/// ||A - QR||_2 / ||A||_2.
template <class TA, class TQ>
double qr_backward_error(MatrixView<TA> a, MatrixView<TQ> q, MatrixView<TQ> r) {
  if (q.rows() != a.rows() || q.cols() != r.rows() || r.cols() != a.cols()) {
    throw DimensionError("qr_backward_error: shapes do not conform");
  }
  Matrix<double> e = detail::widen(a);
  const Matrix<double> qd = detail::widen(q);
  const Matrix<double> rd = detail::widen(r);
  tc_gemm(Trans::No, Trans::No, -1.0, qd.view(), rd.view(), 1.0, e.view(), GemmMode{GemmVariant::Fp64, nullptr});
  const double na = spectral_norm(a);
  if (na == 0.0) return spectral_norm(e.view());
  return spectral_norm(e.view()) / na;
}

/// ||I - Q'Q||_2, divided by the column count when `normalized`.
template <class T>
double q_orthogonality(MatrixView<T> q, bool normalized = false) {
  const index_t n = q.cols();
  const Matrix<double> qd = detail::widen(q);
  Matrix<double> g = Matrix<double>::identity(n);
  tc_gemm(Trans::Yes, Trans::No, -1.0, qd.view(), qd.view(), 1.0, g.view(), GemmMode{GemmVariant::Fp64, nullptr});
  double value = 0.0;
  if (n <= kDenseSvdLimit) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(detail::to_eigen(g.view()), Eigen::EigenvaluesOnly);
    value = eig.eigenvalues().cwiseAbs().maxCoeff();
  } else {
    value = spectral_norm(g.view(), NormMethod::Lanczos);
  }
  return normalized ? value / static_cast<double>(n) : value;
}

/// Residual r = b - A x in binary64.
inline std::vector<double> residual(ConstView<double> a, std::span<const double> x, std::span<const double> b) {
  std::vector<double> r = matvec(a, x, GemmMode{GemmVariant::Fp64, nullptr});
  for (index_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  return r;
}

/// ||A'(Ax - b)||_2.
inline double lls_optimality(ConstView<double> a, std::span<const double> x, std::span<const double> b) {
  if (x.size() != a.cols() || b.size() != a.rows()) throw DimensionError("lls_optimality: shapes do not conform");
  const std::vector<double> r = residual(a, x, b);
  return norm2(matvec_transposed(a, std::span<const double>(r), GemmMode{GemmVariant::Fp64, nullptr}));
}

/// ||A'(Ax - b)|| / (||A||_2 ||Ax - b||); zero when the residual vanishes.
inline double lls_optimality_relative(ConstView<double> a, std::span<const double> x, std::span<const double> b,
                                      double norm_a) {
  const std::vector<double> r = residual(a, x, b);
  const double nr = norm2(r);
  if (nr == 0.0 || norm_a == 0.0) return 0.0;
  return norm2(matvec_transposed(a, std::span<const double>(r), GemmMode{GemmVariant::Fp64, nullptr})) / (norm_a * nr);
}

/// sigma_max / sigma_min by dense SVD; test-scale only (min(m, n) <= 2048).
template <class T>
double condition_number(MatrixView<T> a) {
  if (std::min(a.rows(), a.cols()) > kConditionNumberLimit) {
    throw DimensionError("condition_number is limited to min(m, n) <= 2048");
  }
  const std::vector<double> s = singular_values_of(a);
  if (s.empty()) throw DimensionError("condition_number of an empty matrix");
  return s.back() == 0.0 ? std::numeric_limits<double>::infinity() : s.front() / s.back();
}

}  // namespace mpqr
