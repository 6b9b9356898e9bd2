#pragma once

// General matrix product with a software model of TensorCore arithmetic.
//
// Every output element is accumulated serially in ascending inner index, so
// results are bit-reproducible and independent of the thread count.

#include <array>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "mpqr/detail/parallel.hpp"
#include "mpqr/half.hpp"
#include "mpqr/matrix.hpp"

namespace mpqr {

enum class Trans { No, Yes };

namespace detail {

template <class Acc, class T>
inline Acc gemm_input(T x, GemmVariant variant) noexcept {
  using V = std::remove_const_t<T>;
  if constexpr (std::is_same_v<V, Half>) {
    return static_cast<Acc>(to_double(x));
  } else {
    if (variant == GemmVariant::EmulatedTensorCore) {
      return static_cast<Acc>(to_double(round_to_half(static_cast<double>(x))));
    }
    return static_cast<Acc>(x);
  }
}

template <class T>
index_t op_rows(MatrixView<T> a, Trans t) noexcept {
  return t == Trans::No ? a.rows() : a.cols();
}
template <class T>
index_t op_cols(MatrixView<T> a, Trans t) noexcept {
  return t == Trans::No ? a.cols() : a.rows();
}

/// Packs op(A) into a dense column-major buffer of the accumulation type.
template <class Acc, class T>
std::vector<Acc> pack(MatrixView<T> a, Trans t, GemmVariant variant) {
  const index_t r = op_rows(a, t);
  const index_t c = op_cols(a, t);
  std::vector<Acc> out(r * c);
  if (t == Trans::No) {
    for (index_t j = 0; j < c; ++j)
      for (index_t i = 0; i < r; ++i) out[i + j * r] = gemm_input<Acc>(a(i, j), variant);
  } else {
    for (index_t i = 0; i < a.rows(); ++i)
      for (index_t j = 0; j < a.cols(); ++j) out[j + i * r] = gemm_input<Acc>(a(i, j), variant);
  }
  return out;
}

template <class Acc, class TC>
inline void gemm_store(TC& c, Acc acc, Acc alpha, Acc beta) noexcept {
  if (beta == Acc(0)) {
    c = static_cast<TC>(alpha * acc);
  } else {
    c = static_cast<TC>(alpha * acc + beta * static_cast<Acc>(c));
  }
}

inline constexpr index_t kRowBlock = 128;
inline constexpr index_t kColGroup = 4;

/// Axpy-form kernel over one group of output columns; per-element order is ascending p.
template <class Acc, index_t JB, class TC>
void gemm_column_group(const Acc* a, index_t lda, index_t m, index_t k, const Acc* b, index_t ldb,
                       index_t j0, Acc alpha, Acc beta, MatrixView<TC> c) {
  alignas(64) std::array<std::array<Acc, kRowBlock>, JB> acc;
  for (index_t i0 = 0; i0 < m; i0 += kRowBlock) {
    const index_t ib = std::min(kRowBlock, m - i0);
    for (auto& row : acc) row.fill(Acc(0));
    for (index_t p = 0; p < k; ++p) {
      const Acc* ap = a + i0 + p * lda;
      for (index_t jj = 0; jj < JB; ++jj) {
        const Acc bp = b[p + (j0 + jj) * ldb];
        Acc* dst = acc[jj].data();
        for (index_t i = 0; i < ib; ++i) dst[i] += ap[i] * bp;
      }
    }
    for (index_t jj = 0; jj < JB; ++jj)
      for (index_t i = 0; i < ib; ++i) gemm_store(c(i0 + i, j0 + jj), acc[jj][i], alpha, beta);
  }
}

template <class Acc, class TA, class TB, class TC>
void gemm_impl(Trans ta, Trans tb, double alpha, MatrixView<TA> a, MatrixView<TB> b, double beta,
               MatrixView<TC> c, GemmVariant variant) {
  const index_t m = c.rows();
  const index_t n = c.cols();
  const index_t k = op_cols(a, ta);
  const Acc alpha_acc = static_cast<Acc>(alpha);
  const Acc beta_acc = static_cast<Acc>(beta);
  if (m == 0 || n == 0) return;

  // Thin products against a transposed A: serial dot products straight from
  // the columns of A. Same per-element arithmetic as the packed kernel.
  if (ta == Trans::Yes && n <= 2) {
    std::vector<Acc> bp = pack<Acc>(b, tb, variant);
    detail::parallel_for(
        m,
        [&](index_t i) {
          for (index_t j = 0; j < n; ++j) {
            Acc acc = Acc(0);
            const Acc* bj = bp.data() + j * k;
            for (index_t p = 0; p < k; ++p) acc += gemm_input<Acc>(a(p, i), variant) * bj[p];
            gemm_store(c(i, j), acc, alpha_acc, beta_acc);
          }
        },
        256);
    return;
  }

  std::vector<Acc> a_packed;
  const Acc* a_ptr = nullptr;
  index_t lda = m;
  if constexpr (std::is_same_v<std::remove_const_t<TA>, Acc>) {
    if (ta == Trans::No && variant != GemmVariant::EmulatedTensorCore) {
      a_ptr = a.data();
      lda = a.ld();
    }
  }
  if (a_ptr == nullptr) {
    a_packed = pack<Acc>(a, ta, variant);
    a_ptr = a_packed.data();
  }
  const std::vector<Acc> b_packed = pack<Acc>(b, tb, variant);

  const index_t groups = (n + kColGroup - 1) / kColGroup;
  detail::parallel_for(groups, [&](index_t g) {
    const index_t j0 = g * kColGroup;
    switch (std::min(kColGroup, n - j0)) {
      case 4: gemm_column_group<Acc, 4>(a_ptr, lda, m, k, b_packed.data(), k, j0, alpha_acc, beta_acc, c); break;
      case 3: gemm_column_group<Acc, 3>(a_ptr, lda, m, k, b_packed.data(), k, j0, alpha_acc, beta_acc, c); break;
      case 2: gemm_column_group<Acc, 2>(a_ptr, lda, m, k, b_packed.data(), k, j0, alpha_acc, beta_acc, c); break;
      default: gemm_column_group<Acc, 1>(a_ptr, lda, m, k, b_packed.data(), k, j0, alpha_acc, beta_acc, c); break;
    }
  });
}

}  // namespace detail

/// C <- alpha * op(A) * op(B) + beta * C.
///
/// EmulatedTensorCore rounds every A and B entry to binary16, then forms products
/// and sums in binary32 (a product of two binary16 values is exact in binary32).
/// Fp32 and Fp64 do all arithmetic in that precision. When beta is zero C is not
/// read. Adds 2*m*n*k to the mode's flop counter.
template <class TA, class TB, class TC>
void tc_gemm(Trans ta, Trans tb, double alpha, MatrixView<TA> a, MatrixView<TB> b, double beta,
             MatrixView<TC> c, const GemmMode& mode) {
  static_assert(!std::is_same_v<std::remove_const_t<TC>, Half>, "binary16 output is not supported");
  const index_t m = detail::op_rows(a, ta);
  const index_t k = detail::op_cols(a, ta);
  const index_t kb = detail::op_rows(b, tb);
  const index_t n = detail::op_cols(b, tb);
  if (k != kb || c.rows() != m || c.cols() != n) {
    throw DimensionError("gemm: op(A) is " + shape_string(m, k) + ", op(B) is " + shape_string(kb, n) +
                         ", C is " + shape_string(c.rows(), c.cols()));
  }
  if (mode.variant == GemmVariant::Fp64) {
    detail::gemm_impl<double>(ta, tb, alpha, a, b, beta, c, mode.variant);
  } else {
    detail::gemm_impl<float>(ta, tb, alpha, a, b, beta, c, mode.variant);
  }
  mode.count(2ull * m * n * k);
}

/// Convenience form: returns op(A) * op(B) in a new matrix of type TC.
template <class TC, class TA, class TB>
Matrix<TC> multiply(Trans ta, Trans tb, MatrixView<TA> a, MatrixView<TB> b, const GemmMode& mode) {
  Matrix<TC> c(detail::op_rows(a, ta), detail::op_cols(b, tb));
  tc_gemm(ta, tb, 1.0, a, b, 0.0, c.view(), mode);
  return c;
}

/// y = A v, binary64 result; the arithmetic follows `mode` exactly as in tc_gemm.
template <class T>
std::vector<double> matvec(MatrixView<T> a, std::span<const double> v, const GemmMode& mode) {
  if (v.size() != a.cols()) throw DimensionError("matvec: vector length mismatch");
  std::vector<double> y(a.rows());
  tc_gemm(Trans::No, Trans::No, 1.0, a, ConstView<double>(as_column(v)), 0.0, as_column(std::span<double>(y)), mode);
  return y;
}

/// y = A^T v.
template <class T>
std::vector<double> matvec_transposed(MatrixView<T> a, std::span<const double> v, const GemmMode& mode) {
  if (v.size() != a.rows()) throw DimensionError("matvec_transposed: vector length mismatch");
  std::vector<double> y(a.cols());
  tc_gemm(Trans::Yes, Trans::No, 1.0, a, ConstView<double>(as_column(v)), 0.0, as_column(std::span<double>(y)), mode);
  return y;
}

}  // namespace mpqr
