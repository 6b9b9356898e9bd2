#pragma once

// Communication-avoiding Gram-Schmidt panel factorization.
//
// A tall panel is cut into row blocks (256 x 32 by default). Each block is
// factorized on its own by MGS, the small R factors are stacked and factorized
// again (recursively, eight blocks per group), and each block's local Q is
// multiplied by its slice of the reduction Q. The result is an explicit
// orthonormal Q and an upper triangular R with positive diagonal.

#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "mpqr/detail/parallel.hpp"
#include "mpqr/error.hpp"
#include "mpqr/gemm.hpp"
#include "mpqr/kernels.hpp"
#include "mpqr/matrix.hpp"

namespace mpqr {

/// Explicit-Q factorization A = Q R with Q m x n and R n x n upper triangular.
template <class T>
struct QrFactors {
  Matrix<T> Q;
  Matrix<T> R;
};

struct PanelConfig {
  index_t panel_cols = 32;
  index_t block_rows = 256;
  /// Number of stacked R factors merged per reduction block.
  index_t reduction_fanout = 8;
  /// A pivot norm at or below rank_tolerance * ||A||_F is treated as rank deficiency.
  double rank_tolerance = 0x1p-24;

  void validate() const {
    if (panel_cols == 0) throw Error("panel_cols must be positive");
    if (block_rows < panel_cols) throw Error("block_rows must be >= panel_cols");
    if (reduction_fanout < 2) throw Error("reduction_fanout must be >= 2");
    if (!(rank_tolerance >= 0.0)) throw Error("rank_tolerance must be non-negative");
  }
};

namespace detail {

/// Replaces column k of q by a unit vector orthogonal to columns 0..k-1.
template <class T>
void complete_basis_column(MatrixView<T> q, index_t k) {
  const index_t m = q.rows();
  std::vector<double> v(m);
  for (index_t e = 0; e < m; ++e) {
    std::fill(v.begin(), v.end(), 0.0);
    v[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (index_t p = 0; p < k; ++p) {
        double c = 0.0;
        for (index_t i = 0; i < m; ++i) c += static_cast<double>(q(i, p)) * v[i];
        for (index_t i = 0; i < m; ++i) v[i] -= c * static_cast<double>(q(i, p));
      }
    }
    const double nv = norm2(std::span<const double>(v));
    if (nv > 0.5) {
      for (index_t i = 0; i < m; ++i) q(i, k) = static_cast<T>(v[i] / nv);
      return;
    }
  }
  throw Error("basis completion failed");  // unreachable for k < m
}

/// Column-by-column MGS on q in place, writing R into r:
///   R(k,k) = ||q_k||; q_k /= R(k,k); R(k,k+1:) = q_k' Q(:,k+1:); Q(:,k+1:) -= q_k R(k,k+1:).
/// Norms and inner products are accumulated in binary64.
///
/// With `strict`, a pivot at or below `tolerance` throws RankDeficiencyError.
/// Otherwise the pivot is set to zero and q_k is replaced by an orthonormal
/// completion so that Q keeps orthonormal columns (needed for blocks of a
/// full-rank panel that are themselves rank deficient, e.g. zero rows).
template <class T>
void mgs_inplace(MatrixView<T> q, MatrixView<T> r, double tolerance, bool strict, index_t column_offset,
                 const GemmMode& mode) {
  const index_t m = q.rows();
  const index_t n = q.cols();
  for (index_t k = 0; k < n; ++k) {
    const double pivot = norm2(std::span<const T>(q.col(k)));
    if (!std::isfinite(pivot)) throw NonFiniteError("non-finite column norm in MGS");
    if (pivot <= tolerance) {
      if (strict) throw RankDeficiencyError(column_offset + k, pivot, tolerance);
      r(k, k) = T(0);
      complete_basis_column(q, k);
    } else {
      const T rkk = static_cast<T>(pivot);
      r(k, k) = rkk;
      for (T& x : q.col(k)) x /= rkk;
    }
    const std::span<T> qk = q.col(k);
    for (index_t j = k + 1; j < n; ++j) {
      const T rkj = static_cast<T>(dot(std::span<const T>(qk), std::span<const T>(q.col(j))));
      r(k, j) = rkj;
      const std::span<T> qj = q.col(j);
      for (index_t i = 0; i < m; ++i) qj[i] -= qk[i] * rkj;
    }
    mode.count(3ull * m + 4ull * m * (n - k - 1));
  }
}

template <class V, class T = std::remove_const_t<V>>
QrFactors<T> mgs_factor(MatrixView<V> a, const PanelConfig& cfg, const GemmMode& mode, bool strict,
                        index_t column_offset) {
  if (a.rows() < a.cols()) {
    throw DimensionError("MGS block needs rows >= cols, got " + shape_string(a.rows(), a.cols()));
  }
  QrFactors<T> f{Matrix<T>::from(a), Matrix<T>(a.cols(), a.cols())};
  const double scale = frobenius_norm(a);
  const double tolerance =
      strict ? cfg.rank_tolerance * scale : static_cast<double>(std::numeric_limits<T>::epsilon()) * scale;
  mgs_inplace(f.Q.view(), f.R.view(), tolerance, strict, column_offset, mode);
  return f;
}

/// Row offsets of the blocks of an m-row panel of width w. A trailing
/// remainder shorter than w is merged into the previous block.
inline std::vector<index_t> block_starts(index_t m, index_t block_rows, index_t w) {
  std::vector<index_t> starts;
  for (index_t s = 0; s < m; s += block_rows) starts.push_back(s);
  if (starts.size() > 1 && m - starts.back() < w) starts.pop_back();
  return starts;
}

template <class V, class T = std::remove_const_t<V>>
QrFactors<T> caqr(MatrixView<V> a, const PanelConfig& cfg, const GemmMode& mode, bool strict, index_t block_rows,
                  index_t column_offset) {
  const index_t m = a.rows();
  const index_t w = a.cols();
  if (m <= block_rows) return mgs_factor(a, cfg, mode, strict, column_offset);

  // (1) independent block factorizations
  const std::vector<index_t> starts = block_starts(m, block_rows, w);
  const index_t nb = starts.size();
  std::vector<QrFactors<T>> local(nb);
  detail::parallel_for(nb, [&](index_t b) {
    const index_t r0 = starts[b];
    const index_t r1 = b + 1 < nb ? starts[b + 1] : m;
    local[b] = mgs_factor(a.block(r0, 0, r1 - r0, w), cfg, mode, false, column_offset);
  });

  // (2) stack the R factors
  Matrix<T> stacked(nb * w, w);
  for (index_t b = 0; b < nb; ++b) copy(local[b].R.view(), stacked.view(b * w, 0, w, w));

  // (3) factorize the stack, fanout R factors per block
  QrFactors<T> reduced = caqr(stacked.view(), cfg, mode, strict, cfg.reduction_fanout * w, column_offset);

  // (4) local Q times its slice of the reduction Q, (5) assemble
  QrFactors<T> out{Matrix<T>(m, w), std::move(reduced.R)};
  const GemmMode native = mode.with_variant(native_variant<T>());
  detail::parallel_for(nb, [&](index_t b) {
    const index_t r0 = starts[b];
    const index_t rows = local[b].Q.rows();
    tc_gemm(Trans::No, Trans::No, 1.0, local[b].Q.view(), reduced.Q.view(b * w, 0, w, w), 0.0,
            out.Q.view(r0, 0, rows, w), native);
  });
  return out;
}

}  // namespace detail

/// MGS factorization of a single block (rows >= cols). Throws RankDeficiencyError
/// when a pivot norm is at or below cfg.rank_tolerance * ||A||_F.
template <class V, class T = std::remove_const_t<V>>
QrFactors<T> mgs_block(MatrixView<V> a, const PanelConfig& cfg = {}, const GemmMode& mode = {}) {
  cfg.validate();
  return detail::mgs_factor(a, cfg, mode, true, 0);
}

/// CAQR factorization of an m x w panel (w <= cfg.panel_cols is not required,
/// but blocks must have at least w rows). Block products run in the native
/// precision of T; flops go to mode's counter.
template <class V, class T = std::remove_const_t<V>>
QrFactors<T> caqr_panel(MatrixView<V> a, const PanelConfig& cfg = {}, const GemmMode& mode = {},
                        index_t column_offset = 0) {
  cfg.validate();
  if (a.rows() < a.cols()) {
    throw DimensionError("caqr_panel needs rows >= cols, got " + shape_string(a.rows(), a.cols()));
  }
  if (a.cols() > cfg.block_rows) throw DimensionError("panel wider than block_rows");
  return detail::caqr(a, cfg, mode, true, cfg.block_rows, column_offset);
}

}  // namespace mpqr
