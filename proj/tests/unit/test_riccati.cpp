#include <gtest/gtest.h>

#include <cmath>

#include "generators.hpp"
#include "oracles.hpp"
#include "sentinel/lti.hpp"

using namespace sentinel;
using sentinel::testing::Gen;

TEST(ObserverGain, ScalarMatchesQuadraticFormula) {
  const Matrix a = Matrix::Constant(1, 1, 1.0), c = Matrix::Constant(1, 1, 1.0);
  const Matrix h = lti::design_observer_gain(a, c, Matrix::Identity(1, 1), Matrix::Identity(1, 1));
  const double p = sentinel::testing::scalar_riccati(1.0, 1.0, 1.0, 1.0);
  EXPECT_NEAR(p, 1.0 + std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(h(0, 0), -p, 1e-10);
  EXPECT_NEAR((a + h * c)(0, 0), -std::sqrt(2.0), 1e-10);
}

TEST(ObserverGain, ScalarSweep) {
  Gen g(21);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = g.uniform(-3, 3), c = g.uniform(0.2, 3), q = g.uniform(0.1, 5), r = g.uniform(0.1, 5);
    const Matrix h = lti::design_observer_gain(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, c),
                                               Matrix::Constant(1, 1, q), Matrix::Constant(1, 1, r));
    const double p = sentinel::testing::scalar_riccati(a, c, q, r);
    EXPECT_NEAR(h(0, 0), -p * c / r, 1e-10 * (1.0 + p));
  }
}

TEST(ObserverGain, AlreadyStableWithZeroWeight) {
  const Matrix h = lti::design_observer_gain(Matrix::Constant(1, 1, -1.0), Matrix::Constant(1, 1, 1.0),
                                             Matrix::Zero(1, 1), Matrix::Identity(1, 1));
  EXPECT_NEAR(h(0, 0), 0.0, 1e-12);
}

TEST(ObserverGain, UndetectablePairRejected) {
  Matrix a(2, 2);
  a << 1, 0, 0, -1;
  Matrix c(1, 2);
  c << 0, 1;
  EXPECT_FALSE(lti::is_detectable(a, c));
  EXPECT_THROW(lti::design_observer_gain(a, c, Matrix::Identity(2, 2), Matrix::Identity(1, 1)),
               lti::UndetectableError);
}

TEST(ObserverGain, RandomPairsAlwaysHurwitz) {
  Gen g(22);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = g.integer(1, 6), p = g.integer(1, 3);
    const Matrix a = g.matrix(n, n, 2.0), c = g.matrix(p, n);
    const Matrix h = lti::design_observer_gain(a, c, Matrix::Identity(n, n), Matrix::Identity(p, p));
    EXPECT_TRUE(lti::is_hurwitz(a + h * c, 0.0)) << "trial " << trial;
  }
}

TEST(Care, ResidualBelowTolerance) {
  Gen g(23);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = g.integer(1, 8), m = g.integer(1, 3);
    const Matrix a = g.matrix(n, n, 2.0), b = g.matrix(n, m);
    const Matrix q = Matrix::Identity(n, n), r = Matrix::Identity(m, m);
    const auto sol = lti::solve_care(a, b, q, r);
    EXPECT_LE(sol.relative_residual, lti::kRiccatiResidualTolerance);
    // Independent residual recomputation.
    const Matrix x = sol.x;
    const Matrix res = a.transpose() * x + x * a - x * b * r.inverse() * b.transpose() * x + q;
    const double scale = (a.transpose() * x).norm() * 2 + (x * b * b.transpose() * x).norm() + q.norm();
    EXPECT_LE(res.norm() / scale, 1e-8);
    EXPECT_LE((x - x.transpose()).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + x.cwiseAbs().maxCoeff()));
    EXPECT_TRUE(lti::is_hurwitz(a - b * r.inverse() * b.transpose() * x, 0.0));
  }
}

TEST(Care, EmptyStateIsTrivial) {
  const auto sol = lti::solve_care(Matrix(0, 0), Matrix(0, 1), Matrix(0, 0), Matrix::Identity(1, 1));
  EXPECT_EQ(sol.x.rows(), 0);
}
