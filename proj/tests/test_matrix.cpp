#include <cmath>
#include <filesystem>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mpqr/io.hpp"
#include "mpqr/kernels.hpp"
#include "mpqr/matrix.hpp"
#include "oracles.hpp"

using namespace mpqr;

TEST(Matrix, ColumnMajorCoordinateStamping) {
  Matrix<double> m(5, 7);
  for (index_t j = 0; j < 7; ++j)
    for (index_t i = 0; i < 5; ++i) m(i, j) = 100.0 * i + j;
  for (index_t j = 0; j < 7; ++j)
    for (index_t i = 0; i < 5; ++i) EXPECT_EQ(m.data()[i + j * 5], 100.0 * i + j);
  const auto c3 = m.col(3);
  EXPECT_EQ(c3.size(), 5u);
  EXPECT_EQ(c3[4], 403.0);
}

TEST(Matrix, ViewWritesReachParent) {
  Matrix<double> a = oracle::gaussian(9, 8, 1);
  Matrix<double> expected = a;
  // Mutate a sub-block through a view...
  MatrixView<double> v = a.view(2, 3, 4, 5);
  for (index_t j = 0; j < v.cols(); ++j)
    for (index_t i = 0; i < v.rows(); ++i) v(i, j) = 2.0 * v(i, j) + 1.0;
  // ...and the same update on an extracted copy written back.
  Matrix<double> extracted = Matrix<double>::from(expected.view(2, 3, 4, 5));
  for (double& x : extracted.values()) x = 2.0 * x + 1.0;
  copy(extracted.view(), expected.view(2, 3, 4, 5));
  EXPECT_EQ(a, expected);
}

TEST(Matrix, NestedViewsAndRanges) {
  Matrix<double> a(6, 6);
  MatrixView<double> inner = a.view().block(1, 1, 4, 4).rows_range(1, 2).cols_range(2, 2);
  inner(1, 1) = 42.0;
  EXPECT_EQ(a(3, 4), 42.0);
  EXPECT_EQ(inner.ld(), 6u);
}

TEST(Matrix, OutOfBoundsViewThrows) {
  Matrix<double> a(4, 4);
  EXPECT_THROW(a.view(2, 0, 3, 1), DimensionError);
  EXPECT_THROW(a.view().cols_range(3, 2), DimensionError);
}

TEST(Matrix, ConversionIsExplicitAndPreservesPrecisionTag) {
  const Matrix<double> d(2, 1, {1.0 / 3.0, 2.0});
  const Matrix<float> f = Matrix<float>::from(d);
  EXPECT_EQ(Matrix<float>::precision, Precision::Binary32);
  EXPECT_EQ(f(0, 0), 1.0f / 3.0f);
  const Matrix<Half> h = Matrix<Half>::from(d);
  EXPECT_EQ(to_double(h(1, 0)), 2.0);
}

TEST(Matrix, PayloadSizeChecked) { EXPECT_THROW(Matrix<double>(2, 2, std::vector<double>(3)), DimensionError); }

TEST(Matrix, TransposeAndFinite) {
  const Matrix<double> a = oracle::gaussian(3, 5, 2);
  const Matrix<double> t = transpose(a.view());
  EXPECT_EQ(t(4, 2), a(2, 4));
  EXPECT_TRUE(all_finite(a.view()));
  Matrix<double> b = a;
  b(1, 1) = INFINITY;
  EXPECT_FALSE(all_finite(b.view()));
}

TEST(Norm2, Examples) {
  EXPECT_EQ(norm2(std::vector<double>{3.0, 4.0}), 5.0);
  EXPECT_EQ(norm2(std::vector<double>(10, 0.0)), 0.0);
  EXPECT_EQ(norm2(std::vector<float>{3.0f, 4.0f}), 5.0);
}

TEST(Norm2, MatchesCompensatedOracle) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> dist(-1e3, 1e3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(1000);
    for (double& x : v) x = dist(gen);
    const double want = oracle::compensated_norm(v);
    EXPECT_NEAR(norm2(v), want, 1e-13 * want);
  }
}

TEST(Trsm, IdentityLeavesRightHandSide) {
  const Matrix<double> b = oracle::gaussian(4, 3, 5);
  EXPECT_EQ(trsm_upper(Matrix<double>::identity(4).view(), b.view()), b);
}

TEST(Trsm, TwoByTwo) {
  const Matrix<double> r(2, 2, {2.0, 0.0, 1.0, 4.0});
  const Matrix<double> b(2, 1, {4.0, 8.0});
  const Matrix<double> x = trsm_upper(r.view(), b.view());
  EXPECT_EQ(x(0, 0), 1.0);
  EXPECT_EQ(x(1, 0), 2.0);
  // R' y = b: 2 y0 = 4, y0 + 4 y1 = 8
  const Matrix<double> y = trsm_upper(r.view(), b.view(), true);
  EXPECT_EQ(y(0, 0), 2.0);
  EXPECT_EQ(y(1, 0), 1.5);
}

TEST(Trsm, ZeroDiagonalReportsIndex) {
  const Matrix<double> r(2, 2, {1.0, 0.0, 1.0, 0.0});
  const Matrix<double> b(2, 1, {1.0, 1.0});
  try {
    (void)trsm_upper(r.view(), b.view());
    FAIL() << "expected SingularTriangularError";
  } catch (const SingularTriangularError& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(Trsm, RandomWellConditionedResidual) {
  const index_t n = 64;
  Matrix<double> r = oracle::gaussian(n, n, 6);
  for (index_t j = 0; j < n; ++j) {
    for (index_t i = j + 1; i < n; ++i) r(i, j) = 0.0;
    r(j, j) = 10.0 + std::abs(r(j, j));
  }
  const Matrix<double> b = oracle::gaussian(n, 5, 7);
  for (bool transpose_r : {false, true}) {
    const Matrix<double> x = trsm_upper(r.view(), b.view(), transpose_r);
    const Matrix<double> lhs = oracle::triple_loop(transpose_r ? mpqr::transpose(r.view()) : r, x);
    double num = 0.0;
    double den = 0.0;
    for (index_t i = 0; i < lhs.size(); ++i) {
      num += std::pow(lhs.values()[i] - b.values()[i], 2);
      den += std::pow(b.values()[i], 2);
    }
    EXPECT_LE(std::sqrt(num / den), 1e-12);
  }
}

TEST(Trsm, ShapeMismatchThrows) {
  const Matrix<double> r = Matrix<double>::identity(3);
  const Matrix<double> b(4, 1);
  EXPECT_THROW((void)trsm_upper(r.view(), b.view()), DimensionError);
}

class IoTest : public ::testing::Test {
 protected:
  std::filesystem::path dir = std::filesystem::temp_directory_path() / "mpqr_io_test";
  void SetUp() override { std::filesystem::create_directories(dir); }
  void TearDown() override { std::filesystem::remove_all(dir); }
};

TEST_F(IoTest, BinaryRoundTripEveryPrecision) {
  const Matrix<double> d = oracle::gaussian(7, 3, 8);
  const std::string bytes = io::encode_binary(d);
  EXPECT_EQ(bytes.size(), io::kHeaderBytes + 7 * 3 * 8);
  EXPECT_EQ(std::get<Matrix<double>>(io::decode_binary(bytes)), d);
  const Matrix<float> f = Matrix<float>::from(d);
  EXPECT_EQ(std::get<Matrix<float>>(io::decode_binary(io::encode_binary(f))), f);
  const Matrix<Half> h = Matrix<Half>::from(d);
  EXPECT_EQ(std::get<Matrix<Half>>(io::decode_binary(io::encode_binary(h))), h);
}

TEST_F(IoTest, BinaryHeaderLayout) {
  const Matrix<float> f(2, 3);
  const std::string bytes = io::encode_binary(f);
  EXPECT_EQ(bytes.substr(0, 4), "MPQR");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 1);
}

TEST_F(IoTest, CorruptBinaryRejected) {
  EXPECT_THROW(io::decode_binary("NOPE"), IoError);
  std::string bytes = io::encode_binary(Matrix<double>(2, 2));
  EXPECT_THROW(io::decode_binary(bytes.substr(0, bytes.size() - 1)), IoError);
  bytes[12] = 9;
  EXPECT_THROW(io::decode_binary(bytes), IoError);
}

TEST_F(IoTest, BinaryCsvBinaryIsBitIdentical) {
  const Matrix<double> d = oracle::gaussian(11, 4, 9);
  const std::string bin = (dir / "a.bin").string();
  const std::string csv = (dir / "a.csv").string();
  io::write_binary(bin, d);
  io::write_csv(csv, io::load_matrix(bin));
  const std::string bin2 = (dir / "b.bin").string();
  io::write_binary(bin2, io::load_matrix(csv));
  EXPECT_EQ(io::read_file(bin), io::read_file(bin2));
}

TEST_F(IoTest, CsvParsing) {
  const Matrix<double> m = io::decode_csv("1, 2.5\r\n-3,4e2\n\n");
  EXPECT_EQ(m.rows(), 2u);
  EXPECT_EQ(m(0, 1), 2.5);
  EXPECT_EQ(m(1, 1), 400.0);
  EXPECT_THROW(io::decode_csv("1,2\n3\n"), IoError);
  EXPECT_THROW(io::decode_csv("1,x\n"), IoError);
}

TEST_F(IoTest, MissingFileThrows) {
  EXPECT_THROW(io::load_matrix((dir / "missing.bin").string()), IoError);
  EXPECT_THROW(io::write_file((dir / "no/such/dir/x.bin").string(), "x"), IoError);
}
