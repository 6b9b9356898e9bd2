#pragma once

// IEEE binary16 storage type and the GEMM precision modes.

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>
#include <type_traits>

namespace mpqr {

/// IEEE 754 binary16 value, stored as its raw bit pattern. Only conversion is
/// provided; arithmetic happens after widening.
struct Half {
  std::uint16_t bits = 0;

  static constexpr Half from_bits(std::uint16_t b) noexcept { return Half{b}; }

  friend constexpr bool operator==(Half, Half) noexcept = default;
};

namespace half_limits {
inline constexpr double max_finite = 65504.0;
inline constexpr double unit_roundoff = 0x1p-11;
inline constexpr double min_normal = 0x1p-14;
inline constexpr double min_subnormal = 0x1p-24;
}  // namespace half_limits

/// Round-to-nearest-even conversion from binary64. Overflow gives +-inf, NaN
/// stays NaN (quiet), subnormals are produced exactly.
constexpr Half round_to_half(double x) noexcept {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  const auto sign = static_cast<std::uint16_t>((bits >> 48) & 0x8000u);
  const int biased = static_cast<int>((bits >> 52) & 0x7ffu);
  const std::uint64_t frac = bits & ((std::uint64_t{1} << 52) - 1);

  if (biased == 0x7ff) {
    return Half{static_cast<std::uint16_t>(sign | (frac != 0 ? 0x7e00u : 0x7c00u))};
  }
  // Binary64 subnormals are far below half of the smallest binary16 subnormal.
  if (biased == 0) return Half{sign};

  int exponent = biased - 1023;
  const std::uint64_t significand = frac | (std::uint64_t{1} << 52);

  if (exponent > 15) return Half{static_cast<std::uint16_t>(sign | 0x7c00u)};

  auto round_shift = [](std::uint64_t value, int shift) {
    const std::uint64_t kept = value >> shift;
    const std::uint64_t rest = value & ((std::uint64_t{1} << shift) - 1);
    const std::uint64_t halfway = std::uint64_t{1} << (shift - 1);
    if (rest > halfway || (rest == halfway && (kept & 1u) != 0)) return kept + 1;
    return kept;
  };

  if (exponent >= -14) {
    std::uint64_t mant = round_shift(significand, 42);  // 11 significant bits
    if (mant == (std::uint64_t{1} << 11)) {
      mant >>= 1;
      ++exponent;
    }
    if (exponent > 15) return Half{static_cast<std::uint16_t>(sign | 0x7c00u)};
    return Half{static_cast<std::uint16_t>(sign | ((exponent + 15) << 10) | (mant & 0x3ffu))};
  }

  // Subnormal range: units of 2^-24.
  const int shift = 28 - exponent;
  if (shift > 63) return Half{sign};
  // A carry into bit 10 yields the smallest normal, which is the right encoding.
  const std::uint64_t mant = round_shift(significand, shift);
  return Half{static_cast<std::uint16_t>(sign | mant)};
}

constexpr double to_double(Half h) noexcept {
  const bool negative = (h.bits & 0x8000u) != 0;
  const int biased = (h.bits >> 10) & 0x1f;
  const int mant = h.bits & 0x3ff;
  double magnitude = 0.0;
  if (biased == 0x1f) {
    magnitude = mant != 0 ? std::numeric_limits<double>::quiet_NaN()
                          : std::numeric_limits<double>::infinity();
  } else if (biased == 0) {
    magnitude = static_cast<double>(mant) * 0x1p-24;
  } else {
    // 2^(biased-15) * (1 + mant/1024), built without std::ldexp to stay constexpr.
    double scale = 1.0;
    for (int e = biased - 15; e > 0; --e) scale *= 2.0;
    for (int e = biased - 15; e < 0; ++e) scale *= 0.5;
    magnitude = scale * (1.0 + static_cast<double>(mant) / 1024.0);
  }
  return negative ? -magnitude : magnitude;
}

inline float to_float(Half h) noexcept { return static_cast<float>(to_double(h)); }

inline bool is_finite(Half h) noexcept { return (h.bits & 0x7c00u) != 0x7c00u; }

/// Storage precision of a matrix; the numeric codes are part of the binary file format.
enum class Precision : std::uint8_t { Binary16 = 0, Binary32 = 1, Binary64 = 2 };

template <class T>
struct precision_of;
template <>
struct precision_of<Half> : std::integral_constant<Precision, Precision::Binary16> {};
template <>
struct precision_of<float> : std::integral_constant<Precision, Precision::Binary32> {};
template <>
struct precision_of<double> : std::integral_constant<Precision, Precision::Binary64> {};

template <class T>
inline constexpr Precision precision_of_v = precision_of<std::remove_const_t<T>>::value;

/// Widening conversions used by kernels that accept any storage type.
template <class To, class From>
constexpr To scalar_cast(From v) noexcept {
  if constexpr (std::is_same_v<From, Half>) {
    return static_cast<To>(to_double(v));
  } else if constexpr (std::is_same_v<To, Half>) {
    return round_to_half(static_cast<double>(v));
  } else {
    return static_cast<To>(v);
  }
}

enum class GemmVariant {
  EmulatedTensorCore,  ///< binary16 inputs, binary32 products and accumulation
  Fp32,
  Fp64,
};

constexpr std::string_view to_string(GemmVariant v) noexcept {
  switch (v) {
    case GemmVariant::EmulatedTensorCore: return "tc";
    case GemmVariant::Fp32: return "fp32";
    case GemmVariant::Fp64: return "fp64";
  }
  return "?";
}

enum class FlopKind {
  Factorization,
  WyAssembly,  ///< forming and merging the T factor of a compact-WY representation
};

/// Cumulative floating-point operation count; safe to bump from several threads.
class FlopCounter {
 public:
  void add(std::uint64_t flops, FlopKind kind = FlopKind::Factorization) noexcept {
    (kind == FlopKind::Factorization ? factorization_ : wy_assembly_)
        .fetch_add(flops, std::memory_order_relaxed);
  }
  std::uint64_t factorization() const noexcept { return factorization_.load(std::memory_order_relaxed); }
  std::uint64_t wy_assembly() const noexcept { return wy_assembly_.load(std::memory_order_relaxed); }
  std::uint64_t total() const noexcept { return factorization() + wy_assembly(); }
  void reset() noexcept {
    factorization_.store(0);
    wy_assembly_.store(0);
  }

 private:
  std::atomic<std::uint64_t> factorization_{0};
  std::atomic<std::uint64_t> wy_assembly_{0};
};

/// Arithmetic variant of a matrix product plus an optional (non-owning) flop counter.
struct GemmMode {
  GemmVariant variant = GemmVariant::Fp64;
  FlopCounter* flop_counter = nullptr;

  void count(std::uint64_t flops, FlopKind kind = FlopKind::Factorization) const noexcept {
    if (flop_counter != nullptr) flop_counter->add(flops, kind);
  }
  GemmMode with_variant(GemmVariant v) const noexcept { return GemmMode{v, flop_counter}; }
};

/// Native variant for working scalar `T` (binary32 or binary64).
template <class T>
constexpr GemmVariant native_variant() noexcept {
  return std::is_same_v<T, double> ? GemmVariant::Fp64 : GemmVariant::Fp32;
}

}  // namespace mpqr
