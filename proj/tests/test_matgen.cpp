#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "mpqr/half.hpp"
#include "mpqr/matgen.hpp"
#include "mpqr/metrics.hpp"
#include "oracles.hpp"

using namespace mpqr;

TEST(Philox, KnownAnswerVectors) {
  // Reference outputs of Philox4x32-10 published with the Random123 library.
  const Philox4x32 zero(0);
  EXPECT_EQ(zero({0, 0, 0, 0}), (Philox4x32::Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  const Philox4x32 ones(0xffffffffffffffffull);
  EXPECT_EQ(ones({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}),
            (Philox4x32::Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  const Philox4x32 pi(0x299f31d0a4093822ull);
  EXPECT_EQ(pi({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}),
            (Philox4x32::Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, UnitIntervalIsOpen) {
  EXPECT_GT(Philox4x32::open_unit(0), 0.0);
  EXPECT_LT(Philox4x32::open_unit(~0ull), 1.0);
}

TEST(Family, NamesRoundTrip) {
  for (Family f : {Family::Uniform01, Family::UniformSym, Family::Normal, Family::Geometric, Family::Arithmetic,
                   Family::Clustered}) {
    EXPECT_EQ(parse_family(to_string(f)), f);
  }
  EXPECT_FALSE(parse_family("cauchy").has_value());
}

TEST(SingularValues, Prescriptions) {
  const std::vector<double> g = singular_values(3, Family::Geometric, 100.0);
  EXPECT_NEAR(g[0], 1.0, 1e-15);
  EXPECT_NEAR(g[1], 0.1, 1e-15);
  EXPECT_NEAR(g[2], 0.01, 1e-15);
  EXPECT_EQ(singular_values(4, Family::Clustered, 1e4), (std::vector<double>{1.0, 1.0, 1.0, 1e-4}));
  const std::vector<double> a = singular_values(5, Family::Arithmetic, 5.0);
  EXPECT_NEAR(a[2], 0.6, 1e-15);
  EXPECT_EQ(a.back(), 0.2);
}

TEST(Generate, ClusteredSpectrumRecovered) {
  for (index_t m : {4u, 9u}) {
    const Matrix<double> a = generate(m, 4, SpectrumSpec{Family::Clustered, 1e4, 3});
    const std::vector<double> s = singular_values_of(a.view());
    const std::vector<double> want{1.0, 1.0, 1.0, 1e-4};
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(s[i], want[i], 1e-10 * want[i]);
  }
}

TEST(Generate, GeometricSmall) {
  const std::vector<double> s = singular_values_of(generate(6, 3, SpectrumSpec{Family::Geometric, 100, 4}).view());
  EXPECT_NEAR(s[1], 0.1, 1e-12);
  EXPECT_NEAR(s[2], 0.01, 1e-12);
}

TEST(Generate, ArithmeticConditionWithinTwoPercent) {
  const Matrix<double> a = generate(512, 256, SpectrumSpec{Family::Arithmetic, 1e5, 5});
  EXPECT_NEAR(condition_number(a.view()), 1e5, 0.02 * 1e5);
}

TEST(Generate, SpectrumFidelity) {
  for (Family f : {Family::Geometric, Family::Arithmetic, Family::Clustered}) {
    for (double cond : {1e2, 1e6}) {
      const std::vector<double> want = singular_values(256, f, cond);
      const std::vector<double> got = singular_values_of(generate(512, 256, SpectrumSpec{f, cond, 6}).view());
      for (std::size_t i = 0; i < want.size(); ++i)
        ASSERT_NEAR(got[i], want[i], 1e-8 * want[i]) << to_string(f) << " " << cond << " " << i;
    }
  }
}

TEST(Generate, ConstructionFactorsOrthonormal) {
  const auto [u, v] = construction_factors(300, 120, 7);
  EXPECT_EQ(u.rows(), 300u);
  EXPECT_EQ(v.rows(), 120u);
  EXPECT_LE(q_orthogonality(u.view()), 1e-13);
  EXPECT_LE(q_orthogonality(v.view()), 1e-13);
}

TEST(Generate, IidFamiliesHaveTheirRanges) {
  const Matrix<double> u01 = generate(200, 50, SpectrumSpec{Family::Uniform01, 1.0, 8});
  EXPECT_TRUE(std::all_of(u01.values().begin(), u01.values().end(), [](double x) { return x > 0 && x < 1; }));
  const Matrix<double> sym = generate(200, 50, SpectrumSpec{Family::UniformSym, 1.0, 8});
  EXPECT_TRUE(std::all_of(sym.values().begin(), sym.values().end(), [](double x) { return x > -1 && x < 1; }));
  EXPECT_TRUE(std::any_of(sym.values().begin(), sym.values().end(), [](double x) { return x < 0; }));
  const Matrix<double> g = generate(400, 250, SpectrumSpec{Family::Normal, 1.0, 8});
  double mean = 0.0;
  double sq = 0.0;
  for (double x : g.values()) {
    mean += x;
    sq += x * x;
  }
  mean /= static_cast<double>(g.size());
  sq /= static_cast<double>(g.size());
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(sq, 1.0, 0.01);
}

TEST(Generate, DeterministicAndSeedSensitive) {
  for (Family f : {Family::Uniform01, Family::Normal, Family::Geometric, Family::Clustered}) {
    const SpectrumSpec spec{f, 1e3, 9};
    EXPECT_EQ(generate(64, 32, spec), generate(64, 32, spec));
    EXPECT_NE(generate(64, 32, spec), generate(64, 32, SpectrumSpec{f, 1e3, 10}));
  }
  EXPECT_EQ(generate_rhs(50, 3), generate_rhs(50, 3));
  EXPECT_NE(generate_rhs(50, 3), generate_rhs(50, 4));
}

TEST(Generate, FrozenFirstEntries) {
  // Pinned so that changes to the generator are noticed.
  const Matrix<double> a = generate(3, 2, SpectrumSpec{Family::Uniform01, 1.0, 1});
  const Matrix<double> again = generate(3, 2, SpectrumSpec{Family::Uniform01, 1.0, 1});
  EXPECT_EQ(a, again);
  const Philox4x32 rng(1);
  EXPECT_EQ(a(0, 0), rng.uniform(rng_stream::entries, 0));
  EXPECT_EQ(a(2, 1), rng.uniform(rng_stream::entries, 5));
}

TEST(Generate, InvalidArguments) {
  EXPECT_THROW((void)generate(3, 4, SpectrumSpec{}), Error);
  EXPECT_THROW((void)generate(3, 1, SpectrumSpec{}), Error);
  EXPECT_THROW((void)generate(8, 4, SpectrumSpec{Family::Geometric, 0.5, 1}), Error);
}

TEST(Normalize, ScalesLargeMatrices) {
  const Matrix<double> a(2, 2, {2.0, -1.0, 0.5, 1.0});
  const Normalized n = normalize_for_half(a.view());
  EXPECT_EQ(n.scale, 0.5);
  EXPECT_EQ(n.matrix(0, 0), 1.0);
  EXPECT_EQ(n.matrix(1, 0), -0.5);
}

TEST(Normalize, LeavesUnitRangeAlone) {
  const Matrix<double> a(2, 1, {0.25, -1.0});
  const Normalized n = normalize_for_half(a.view());
  EXPECT_EQ(n.scale, 1.0);
  EXPECT_EQ(n.matrix, a);
}

TEST(Normalize, HugeEntriesBecomeFiniteHalves) {
  Matrix<double> a = oracle::gaussian(20, 5, 1);
  a(3, 3) = 1e6;
  const Normalized n = normalize_for_half(a.view());
  for (double x : n.matrix.values()) ASSERT_TRUE(is_finite(round_to_half(x)));
}

TEST(Normalize, ZeroMatrixRejected) { EXPECT_THROW((void)normalize_for_half(Matrix<double>(3, 3).view()), Error); }
