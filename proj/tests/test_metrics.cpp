#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "mpqr/lls.hpp"
#include "mpqr/matgen.hpp"
#include "mpqr/metrics.hpp"
#include "oracles.hpp"

using namespace mpqr;

namespace {

double oracle_norm2(const Matrix<double>& a) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(oracle::to_eigen(a)).singularValues()(0);
}

}  // namespace

TEST(BackwardError, ExactFactorsGiveZero) {
  const Matrix<double> i = Matrix<double>::identity(6, 4);
  const Matrix<double> r = Matrix<double>::identity(4);
  EXPECT_EQ(qr_backward_error(i.view(), i.view(), r.view()), 0.0);
}

TEST(BackwardError, Binary64HouseholderIsTiny) {
  const Matrix<double> a = oracle::gaussian(256, 128, 11);
  const oracle::Factors f = oracle::householder(a);
  EXPECT_LE(qr_backward_error(a.view(), f.Q.view(), f.R.view()), 1e-13);
}

TEST(BackwardError, PlantedPerturbationIsMeasured) {
  const Matrix<double> a = oracle::gaussian(256, 128, 12);
  oracle::Factors f = oracle::householder(a);
  const double na = oracle_norm2(a);
  f.R(0, 0) += 1e-3 * na;
  // Perturbing R(0,0) by d changes QR by d * q_0 e_0', a rank-one term of norm d.
  EXPECT_NEAR(qr_backward_error(a.view(), f.Q.view(), f.R.view()), 1e-3, 1e-9);
}

TEST(BackwardError, ShapeMismatchThrows) {
  const Matrix<double> a(4, 3);
  EXPECT_THROW((void)qr_backward_error(a.view(), Matrix<double>(4, 2).view(), Matrix<double>(3, 3).view()),
               DimensionError);
}

TEST(Orthogonality, IdentityAndDuplicatedColumn) {
  EXPECT_EQ(q_orthogonality(Matrix<double>::identity(5, 3).view()), 0.0);
  Matrix<double> q = Matrix<double>::identity(5, 3);
  q(0, 1) = 1.0;
  q(1, 1) = 0.0;
  // Gram matrix [[1,1,0],[1,1,0],[0,0,1]] has eigenvalues 2, 0, 1.
  EXPECT_NEAR(q_orthogonality(q.view()), 1.0, 1e-15);
  EXPECT_GE(q_orthogonality(q.view()), 1.0 - 1e-15);
  EXPECT_NEAR(q_orthogonality(q.view(), true), 1.0 / 3.0, 1e-15);
}

TEST(Orthogonality, MatchesOracleForPerturbedBasis) {
  Matrix<double> q = oracle::householder(oracle::gaussian(200, 50, 13)).Q;
  q(7, 3) += 1e-6;
  const Eigen::MatrixXd e = oracle::to_eigen(q);
  const Eigen::MatrixXd g = Eigen::MatrixXd::Identity(50, 50) - e.transpose() * e;
  const double want = Eigen::JacobiSVD<Eigen::MatrixXd>(g).singularValues()(0);
  EXPECT_NEAR(q_orthogonality(q.view()), want, 1e-6 * want);
}

TEST(Optimality, Examples) {
  const Matrix<double> i = Matrix<double>::identity(2);
  const std::vector<double> b{1.0, 2.0};
  EXPECT_EQ(lls_optimality(i.view(), b, b), 0.0);
  // A = [1; 1], b = [1; 3]: A'(Ax - b) = 2x - 4.
  const Matrix<double> a(2, 1, {1.0, 1.0});
  const std::vector<double> b2{1.0, 3.0};
  EXPECT_EQ(lls_optimality(a.view(), std::vector<double>{2.0}, b2), 0.0);
  EXPECT_EQ(lls_optimality(a.view(), std::vector<double>{0.0}, b2), 4.0);
  // Relative form: ||A'r|| / (||A|| ||r||) = 4 / (sqrt2 * sqrt10).
  EXPECT_NEAR(lls_optimality_relative(a.view(), std::vector<double>{0.0}, b2, std::sqrt(2.0)),
              4.0 / std::sqrt(20.0), 1e-15);
  EXPECT_EQ(lls_optimality_relative(i.view(), b, b, 1.0), 0.0);
  EXPECT_THROW((void)lls_optimality(a.view(), std::vector<double>{1.0, 2.0}, b2), DimensionError);
}

TEST(Optimality, AgreesWithPseudoInverseOracle) {
  const Matrix<double> a = generate(300, 100, SpectrumSpec{Family::Geometric, 1e2, 14});
  const std::vector<double> b = generate_rhs(300, 14);
  const std::vector<double> x_ne = solve_normal_equations(a.view(), b);
  const std::vector<double> x_or = oracle::lls_solution(a, b);
  // Both solutions sit at rounding level; the metric must see them alike.
  const double ne = lls_optimality(a.view(), x_ne, b);
  const double ref = lls_optimality(a.view(), x_or, b);
  EXPECT_LT(ne, 1e-12);
  EXPECT_LT(ne / ref, 10.0);
  EXPECT_GT(ne / ref, 0.1);
  // An independently computed A'(Ax - b) at the oracle solution.
  const Eigen::VectorXd eb = Eigen::Map<const Eigen::VectorXd>(b.data(), 300);
  const Eigen::VectorXd ex = Eigen::Map<const Eigen::VectorXd>(x_or.data(), 100);
  const Eigen::MatrixXd ea = oracle::to_eigen(a);
  EXPECT_NEAR(ref, (ea.transpose() * (ea * ex - eb)).norm(), 1e-14);
}

TEST(ConditionNumber, Examples) {
  EXPECT_EQ(condition_number(Matrix<double>::identity(4).view()), 1.0);
  Matrix<double> d(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 1e-4;
  EXPECT_NEAR(condition_number(d.view()), 1e4, 1e-8);
  EXPECT_TRUE(std::isinf(condition_number(Matrix<double>(3, 2).view())));
  const Matrix<double> a = generate(512, 256, SpectrumSpec{Family::Arithmetic, 1e5, 15});
  EXPECT_NEAR(condition_number(a.view()), 1e5, 2e3);
}

TEST(SpectralNorm, LanczosMatchesDenseSvd) {
  const Matrix<double> a = oracle::gaussian(512, 512, 16);
  const double dense = spectral_norm(a.view(), NormMethod::DenseSvd);
  const double lanczos = spectral_norm(a.view(), NormMethod::Lanczos);
  EXPECT_NEAR(lanczos, dense, 1e-5 * dense);
  EXPECT_NEAR(dense, oracle_norm2(a), 1e-12 * dense);
}

TEST(SpectralNorm, LanczosOnPrescribedSpectrum) {
  for (Family f : {Family::Geometric, Family::Clustered}) {
    const Matrix<double> a = generate(400, 200, SpectrumSpec{f, 1e6, 17});
    EXPECT_NEAR(spectral_norm(a.view(), NormMethod::Lanczos), 1.0, 1e-8);
  }
}

TEST(SpectralNorm, AutoSwitchesAtLimit) {
  // Above the dense limit the estimate must still agree with the true norm.
  Matrix<double> a(1100, 1030);
  for (index_t k = 0; k < 1030; ++k) a(k, k) = 1.0 + static_cast<double>(k % 7);
  EXPECT_NEAR(spectral_norm(a.view()), 7.0, 1e-8);
}

TEST(Metrics, NonNegative) {
  for (unsigned seed = 20; seed < 25; ++seed) {
    const Matrix<double> a = oracle::gaussian(40, 20, seed);
    const oracle::Factors f = oracle::mgs(a);
    EXPECT_GE(qr_backward_error(a.view(), f.Q.view(), f.R.view()), 0.0);
    EXPECT_GE(q_orthogonality(f.Q.view()), 0.0);
    const std::vector<double> b = generate_rhs(40, seed);
    EXPECT_GE(lls_optimality(a.view(), std::vector<double>(20, 0.5), b), 0.0);
  }
}

TEST(Metrics, AcceptsBinary32Factors) {
  const Matrix<double> a = oracle::gaussian(64, 32, 26);
  const oracle::Factors f = oracle::householder(a);
  const Matrix<float> qf = Matrix<float>::from(f.Q);
  const Matrix<float> rf = Matrix<float>::from(f.R);
  const double be = qr_backward_error(a.view(), qf.view(), rf.view());
  EXPECT_GT(be, 0.0);
  EXPECT_LT(be, 1e-6);
  EXPECT_LT(q_orthogonality(qf.view()), 1e-5);
}
