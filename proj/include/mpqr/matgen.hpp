#pragma once

// Reproducible random test matrices with prescribed singular value spectra.
//
// Random numbers come from Philox4x32-10 (Salmon et al., SC'11) keyed by the
// seed and indexed by (stream, element index), so every entry is a pure
// function of (seed, position) on every platform.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mpqr/error.hpp"
#include "mpqr/kernels.hpp"
#include "mpqr/matrix.hpp"

namespace mpqr {

class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit constexpr Philox4x32(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  constexpr Block operator()(Block ctr) const noexcept {
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }

  /// Two 64-bit words for element `index` of `stream`.
  constexpr std::array<std::uint64_t, 2> words(std::uint32_t stream, std::uint64_t index) const noexcept {
    const Block out = (*this)({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream, 0});
    return {(std::uint64_t{out[0]} << 32) | out[1], (std::uint64_t{out[2]} << 32) | out[3]};
  }

  /// Uniform on the open interval (0, 1): 52 random bits plus a half step, exact in binary64.
  static constexpr double open_unit(std::uint64_t w) noexcept {
    return (static_cast<double>(w >> 12) + 0.5) * 0x1p-52;
  }

  double uniform(std::uint32_t stream, std::uint64_t index) const noexcept {
    return open_unit(words(stream, index)[0]);
  }

  /// Standard normal by Box-Muller on the two words of one block.
  double normal(std::uint32_t stream, std::uint64_t index) const noexcept {
    const auto w = words(stream, index);
    const double u1 = open_unit(w[0]);
    const double u2 = open_unit(w[1]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::array<std::uint32_t, 2> key_;
};

enum class Family { Uniform01, UniformSym, Normal, Geometric, Arithmetic, Clustered };

constexpr std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::Uniform01: return "uniform01";
    case Family::UniformSym: return "uniformsym";
    case Family::Normal: return "normal";
    case Family::Geometric: return "geometric";
    case Family::Arithmetic: return "arithmetic";
    case Family::Clustered: return "clustered";
  }
  return "?";
}

inline std::optional<Family> parse_family(std::string_view s) noexcept {
  for (Family f : {Family::Uniform01, Family::UniformSym, Family::Normal, Family::Geometric, Family::Arithmetic,
                   Family::Clustered}) {
    if (s == to_string(f)) return f;
  }
  return std::nullopt;
}

constexpr bool is_svd_family(Family f) noexcept {
  return f == Family::Geometric || f == Family::Arithmetic || f == Family::Clustered;
}

struct SpectrumSpec {
  Family family = Family::Normal;
  /// Target 2-norm condition number; unused by the i.i.d. families.
  double cond = 1.0;
  std::uint64_t seed = 0;
};

namespace rng_stream {
inline constexpr std::uint32_t entries = 0;
inline constexpr std::uint32_t left_factor = 1;
inline constexpr std::uint32_t right_factor = 2;
inline constexpr std::uint32_t rhs = 3;
}  // namespace rng_stream

/// Prescribed singular values, descending, sigma_1 = 1 and sigma_n = 1/cond.
inline std::vector<double> singular_values(index_t n, Family family, double cond) {
  if (!is_svd_family(family)) throw Error("family has no prescribed spectrum");
  if (!(cond >= 1.0) || !std::isfinite(cond)) throw Error("cond must be finite and >= 1");
  std::vector<double> sigma(n, 1.0);
  if (n == 0) return sigma;
  const double last = 1.0 / cond;
  for (index_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    switch (family) {
      case Family::Geometric: sigma[i] = std::pow(cond, -t); break;
      case Family::Arithmetic: sigma[i] = 1.0 - t * (1.0 - last); break;
      case Family::Clustered: sigma[i] = i + 1 == n ? last : 1.0; break;
      default: break;
    }
  }
  sigma.back() = last;
  return sigma;
}

namespace detail {

inline Eigen::MatrixXd gaussian(index_t rows, index_t cols, const Philox4x32& rng, std::uint32_t stream) {
  Eigen::MatrixXd g(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (index_t j = 0; j < cols; ++j)
    for (index_t i = 0; i < rows; ++i)
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rng.normal(stream, i + j * rows);
  return g;
}

/// Thin orthonormal factor of a Gaussian matrix (binary64 Householder QR).
inline Eigen::MatrixXd orthonormal_factor(index_t rows, index_t cols, const Philox4x32& rng, std::uint32_t stream) {
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(rows, cols, rng, stream));
  return qr.householderQ() * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

}  // namespace detail

/// Orthonormal construction factors U (m x n) and V (n x n) used by the SVD families.
inline std::pair<Matrix<double>, Matrix<double>> construction_factors(index_t m, index_t n, std::uint64_t seed) {
  const Philox4x32 rng(seed);
  const Eigen::MatrixXd u = detail::orthonormal_factor(m, n, rng, rng_stream::left_factor);
  const Eigen::MatrixXd v = detail::orthonormal_factor(n, n, rng, rng_stream::right_factor);
  return {Matrix<double>(m, n, std::vector<double>(u.data(), u.data() + u.size())),
          Matrix<double>(n, n, std::vector<double>(v.data(), v.data() + v.size()))};
}

/// Random m x n matrix following `spec`. Deterministic in (m, n, spec).
inline Matrix<double> generate(index_t m, index_t n, const SpectrumSpec& spec) {
  if (n < 2 || m < n) throw DimensionError("generate needs m >= n >= 2, got " + shape_string(m, n));
  if (!(spec.cond >= 1.0) || !std::isfinite(spec.cond)) throw Error("cond must be finite and >= 1");
  const Philox4x32 rng(spec.seed);
  Matrix<double> a(m, n);
  switch (spec.family) {
    case Family::Uniform01:
      for (index_t k = 0; k < m * n; ++k) a.values()[k] = rng.uniform(rng_stream::entries, k);
      return a;
    case Family::UniformSym:
      for (index_t k = 0; k < m * n; ++k) a.values()[k] = 2.0 * rng.uniform(rng_stream::entries, k) - 1.0;
      return a;
    case Family::Normal:
      for (index_t k = 0; k < m * n; ++k) a.values()[k] = rng.normal(rng_stream::entries, k);
      return a;
    default: break;
  }
  const std::vector<double> sigma = singular_values(n, spec.family, spec.cond);
  const Eigen::MatrixXd u = detail::orthonormal_factor(m, n, rng, rng_stream::left_factor);
  const Eigen::MatrixXd v = detail::orthonormal_factor(n, n, rng, rng_stream::right_factor);
  const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(sigma.data(), static_cast<Eigen::Index>(n));
  const Eigen::MatrixXd product = u * s.asDiagonal() * v.transpose();
  std::copy(product.data(), product.data() + product.size(), a.data());
  return a;
}

/// Deterministic right-hand side with standard normal entries.
inline std::vector<double> generate_rhs(index_t m, std::uint64_t seed) {
  const Philox4x32 rng(seed);
  std::vector<double> b(m);
  for (index_t i = 0; i < m; ++i) b[i] = rng.normal(rng_stream::rhs, i);
  return b;
}

struct Normalized {
  Matrix<double> matrix;
  /// matrix = scale * A
  double scale = 1.0;
};

/// Scales A so that max |a_ij| <= 1 and no entry overflows binary16. Matrices
/// already inside [-1, 1] are returned unchanged with scale 1.
inline Normalized normalize_for_half(ConstView<double> a) {
  if (!all_finite(a)) throw NonFiniteError("normalize_for_half: non-finite input");
  const double largest = max_abs(a);
  if (largest == 0.0) throw Error("normalize_for_half: zero matrix");
  Normalized out{Matrix<double>::from(a), 1.0};
  if (largest <= 1.0) return out;
  out.scale = 1.0 / largest;
  for (double& v : out.matrix.values()) v /= largest;
  return out;
}

}  // namespace mpqr
