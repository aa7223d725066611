#include <gtest/gtest.h>

#include <cmath>

#include "entrosense/corrmodel.hpp"
#include "entrosense/errors.hpp"
#include "oracles.hpp"

using namespace entrosense;

TEST(CorrModel, KernelValues) {
  const CorrelationModel m;
  EXPECT_EQ(kernel_value(m, 0.0), 1.0);
  EXPECT_NEAR(kernel_value(m, m.theta), 0.36787944117144233, 1e-15);
  EXPECT_LE(kernel_value(m, 10.0 * m.theta), std::exp(-100.0) * (1.0 + 1e-12));
  EXPECT_THROW(kernel_value(m, -1.0), ParameterError);
  EXPECT_THROW(kernel_value({KernelKind::SquaredExponential, 0.0}, 1.0), ParameterError);
}

TEST(CorrModel, ScalarField) {
  SensorField f{{{1, 2}}, {2.0}, {0.1}, 0};
  const RawCorrelation c = build_correlation(f, {}, distance_matrix(f));
  EXPECT_EQ(c.c(0, 0), 4.0);
}

TEST(CorrModel, CoincidentSensorsAllOnes) {
  SensorField f{{{1, 1}, {1, 1}}, {1, 1}, {0.1, 0.1}, 0};
  const RawCorrelation c = build_correlation(f, {}, distance_matrix(f));
  EXPECT_EQ(c.c, Eigen::MatrixXd::Ones(2, 2));
  const auto ev = oracle::jacobi_eigenvalues(c.c);
  EXPECT_NEAR(ev[0], 2.0, 1e-15);
  EXPECT_NEAR(ev[1], 0.0, 1e-15);
}

TEST(CorrModel, TwoSensorsAtRangeDistance) {
  const CorrelationModel m;
  SensorField f{{{0, 0}, {m.theta, 0}}, {1, 1}, {0.1, 0.1}, 0};
  const RawCorrelation c = build_correlation(f, m, distance_matrix(f));
  const double e1 = std::exp(-1.0);
  EXPECT_NEAR(c.c(0, 1), e1, 1e-15);
  // 2x2 [[1, a], [a, 1]] has eigenvalues 1 +- a.
  const auto ev = oracle::jacobi_eigenvalues(c.c);
  EXPECT_NEAR(ev[0], 1.0 + e1, 1e-14);
  EXPECT_NEAR(ev[1], 1.0 - e1, 1e-14);
}

TEST(CorrModel, DiagonalAndSymmetry) {
  const SensorField f = oracle::random_field(31, 6);
  const RawCorrelation c = build_correlation(f, {}, distance_matrix(f));
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    EXPECT_EQ(c.c(i, i), f.sigma[static_cast<std::size_t>(i)] * f.sigma[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < c.size(); ++j) EXPECT_EQ(c.c(i, j), c.c(j, i));
  }
}

TEST(CorrModel, DimensionMismatch) {
  const SensorField f = oracle::random_field(5, 1);
  const DistanceMatrix d = distance_matrix(oracle::random_field(6, 1));
  EXPECT_THROW(build_correlation(f, {}, d), ParameterError);
}

TEST(CorrModel, ExactKernelIsPsd) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const SensorField f = oracle::random_field(20 + seed % 31, seed);
    const RawCorrelation c = build_correlation(f, {}, distance_matrix(f));
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.c);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9 * es.eigenvalues().maxCoeff()) << seed;
  }
}

TEST(CorrModel, ProjectionLeavesPsdAlone) {
  const SensorField f = oracle::random_field(25, 2);
  const RawCorrelation c = build_correlation(f, {}, distance_matrix(f));
  const RawCorrelation p = psd_project(c);
  EXPECT_LE((p.c - c.c).norm(), 1e-12 * c.c.norm());
}

TEST(CorrModel, ProjectionClipsNegative) {
  RawCorrelation c{Eigen::Vector2d(1.0, -0.5).asDiagonal()};
  const RawCorrelation p = psd_project(c);
  EXPECT_NEAR(p.c(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(p.c(1, 1), 0.0, 1e-15);
  EXPECT_NEAR(p.c(0, 1), 0.0, 1e-15);
}

TEST(CorrModel, ProjectionOfNoisyModel) {
  const SensorField f = oracle::random_field(20, 13);
  const DistanceMatrix noisy = perturb_distances(distance_matrix(f), 0.1, 5);
  const RawCorrelation p = psd_project(build_correlation(f, {}, noisy));
  EXPECT_EQ(p.c, p.c.transpose());
  const auto ev = oracle::jacobi_eigenvalues(p.c);
  EXPECT_GE(ev.back(), -1e-12 * ev.front());
}
