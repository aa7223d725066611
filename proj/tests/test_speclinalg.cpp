#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "entrosense/corrmodel.hpp"
#include "entrosense/errors.hpp"
#include "entrosense/speclinalg.hpp"
#include "oracles.hpp"

using namespace entrosense;

namespace {

Eigen::MatrixXd random_factor(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd f(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) f(i, j) = n(rng);
  return f;
}

Eigen::MatrixXd kernel_matrix(std::size_t m, std::uint64_t seed) {
  const SensorField f = oracle::random_field(m, seed);
  return build_correlation(f, {}, distance_matrix(f)).c;
}

}  // namespace

TEST(SpecLinalg, Identity) {
  const SpectralData s = eig_sym(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_EQ(s.rank, 3);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(s.eigenvalues[k], 1.0, 1e-15);
  EXPECT_NEAR(pseudo_log_det(s), 0.0, 1e-15);
}

TEST(SpecLinalg, AllOnes) {
  const SpectralData s = eig_sym(Eigen::MatrixXd::Ones(2, 2));
  EXPECT_EQ(s.rank, 1);
  EXPECT_NEAR(s.eigenvalues[0], 2.0, 1e-15);
  EXPECT_NEAR(s.eigenvalues[1], 0.0, 1e-15);
  EXPECT_NEAR(pseudo_log_det(s), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.lambda_min_pos, s.eigenvalues[0]);
}

TEST(SpecLinalg, ConstructedRank) {
  const Eigen::MatrixXd f = random_factor(5, 3, 1);
  const SpectralData s = eig_sym(f * f.transpose());
  EXPECT_EQ(s.rank, 3);
}

TEST(SpecLinalg, DiagonalPseudoDeterminant) {
  const SpectralData s = eig_sym(Eigen::Vector2d(2.0, 0.0).asDiagonal().toDenseMatrix());
  EXPECT_EQ(s.rank, 1);
  EXPECT_NEAR(pseudo_log_det(s), 1.0, 1e-15);
}

TEST(SpecLinalg, PseudoDeterminantMatchesJacobi) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Eigen::MatrixXd f = random_factor(3, 2, seed);
    const Eigen::MatrixXd c = f * f.transpose();
    const auto ev = oracle::jacobi_eigenvalues(c);
    const SpectralData s = eig_sym(c);
    ASSERT_EQ(s.rank, 2);
    EXPECT_NEAR(pseudo_log_det(s), std::log2(ev[0] * ev[1]), 1e-10);
  }
}

TEST(SpecLinalg, RankZeroAndAsymmetry) {
  EXPECT_THROW(pseudo_log_det(eig_sym(Eigen::MatrixXd::Zero(3, 3))), DomainError);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
  a(0, 1) = 1e-3;
  EXPECT_THROW(eig_sym(a), ParameterError);
  a(0, 1) = 1e-14;
  EXPECT_NO_THROW(eig_sym(a));
  EXPECT_THROW(eig_sym(Eigen::MatrixXd::Identity(2, 2), 0.0), ParameterError);
}

TEST(SpecLinalg, EigenvaluesSortedAndMatchJacobi) {
  const Eigen::MatrixXd c = kernel_matrix(20, 4);
  const SpectralData s = eig_sym(c);
  const auto ev = oracle::jacobi_eigenvalues(c);
  for (Eigen::Index k = 0; k + 1 < s.eigenvalues.size(); ++k) EXPECT_GE(s.eigenvalues[k], s.eigenvalues[k + 1]);
  for (Eigen::Index k = 0; k < s.rank; ++k)
    EXPECT_NEAR(s.eigenvalues[k], ev[static_cast<std::size_t>(k)], 1e-9 * ev[0]);
}

TEST(SpecLinalg, ReferenceScaleSetsCutoff) {
  const Eigen::MatrixXd c = Eigen::Vector2d(1.0, 1e-6).asDiagonal();
  EXPECT_EQ(eig_sym(c).rank, 2);
  EXPECT_EQ(eig_sym(c, 1e-8, 1e3).rank, 1);
}

TEST(SpecLinalg, CholeskyIdentity) {
  const ReducedCholesky r = pivoted_cholesky(Eigen::MatrixXd::Identity(3, 3));
  EXPECT_EQ(r.rank(), 3);
  EXPECT_LE((r.l * r.l.transpose() - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-15);
  EXPECT_LE((r.l.transpose() * r.l - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-15);
}

TEST(SpecLinalg, CholeskyAllOnes) {
  const ReducedCholesky r = pivoted_cholesky(Eigen::MatrixXd::Ones(4, 4));
  ASSERT_EQ(r.rank(), 1);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(r.l(i, 0)), 1.0, 1e-15);
}

TEST(SpecLinalg, CholeskyRejectsIndefinite) {
  const Eigen::MatrixXd a = Eigen::Vector2d(1.0, -1.0).asDiagonal();
  EXPECT_THROW(pivoted_cholesky(a), NotPsdError);
}

TEST(SpecLinalg, ReducedFactorOfTruncatedKernel) {
  const Eigen::MatrixXd c = kernel_matrix(30, 8);
  const SpectralData s = eig_sym(c);
  const Eigen::MatrixXd ct = truncate_to_rank(s);
  const ReducedCholesky r = pivoted_cholesky(ct);
  EXPECT_EQ(r.rank(), s.rank);
  EXPECT_LE(r.residual, kDefaultCholTol * ct.norm());
  const double pld = pseudo_log_det(s);
  const double gram = logdet_gram_value(r.l, Eigen::VectorXd::Ones(30));
  EXPECT_LE(std::abs(gram - pld), 1e-6 * std::abs(pld));
}

TEST(SpecLinalg, LogDetAllOnesWeights) {
  const Eigen::MatrixXd f = random_factor(6, 3, 3);
  const Eigen::MatrixXd c = f * f.transpose();
  const ReducedCholesky r = pivoted_cholesky(c);
  EXPECT_NEAR(logdet_gram_value(r.l, Eigen::VectorXd::Ones(6)), pseudo_log_det(eig_sym(c)), 1e-9);
}

TEST(SpecLinalg, LogDetDiagonalCase) {
  Eigen::VectorXd p(4);
  p << 0.1, 0.5, 1.0, 0.02;
  const LogDetGram g = logdet_gram(Eigen::MatrixXd::Identity(4, 4), p);
  EXPECT_NEAR(g.value, p.array().log2().sum(), 1e-13);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(g.gradient[i], 1.0 / (p[i] * std::numbers::ln2), 1e-12);
}

TEST(SpecLinalg, LogDetGradientFiniteDifference) {
  const Eigen::MatrixXd l = random_factor(10, 4, 12);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Eigen::VectorXd p(10);
  for (auto& x : p) x = u(rng);
  const LogDetGram g = logdet_gram(l, p);
  const auto f = [&](const Eigen::VectorXd& q) { return logdet_gram_value(l, q); };
  for (Eigen::Index i = 0; i < 10; ++i) {
    const double fd = oracle::central_difference(f, p, i, 1e-6);
    EXPECT_NEAR(g.gradient[i], fd, 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST(SpecLinalg, LogDetErrors) {
  const Eigen::MatrixXd l = random_factor(4, 2, 1);
  Eigen::VectorXd p = Eigen::VectorXd::Ones(4);
  p[2] = 0.0;
  EXPECT_THROW(logdet_gram(l, p), DomainError);
  EXPECT_THROW(logdet_gram(l, Eigen::VectorXd::Ones(3)), ParameterError);
  Eigen::MatrixXd dup(3, 2);
  dup << 1, 2, 1, 2, 1, 2;  // rank 1 factor, singular Gram
  EXPECT_THROW(logdet_gram(dup, Eigen::VectorXd::Ones(3)), DomainError);
}

TEST(SpecLinalg, PermutationInvariance) {
  const Eigen::MatrixXd c = kernel_matrix(15, 21);
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(15);
  perm.setIdentity();
  std::mt19937_64 rng(1);
  std::shuffle(perm.indices().data(), perm.indices().data() + 15, rng);
  const Eigen::MatrixXd pc = perm * c * perm.transpose();
  const SpectralData a = eig_sym(c), b = eig_sym(pc);
  EXPECT_EQ(a.rank, b.rank);
  EXPECT_NEAR(pseudo_log_det(a), pseudo_log_det(b), 1e-8 * std::abs(pseudo_log_det(a)));
}
