#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "armle/ar_core.hpp"
#include "oracles.hpp"

namespace armle {
namespace {

TEST(Companion, Layout) {
  const Eigen::Vector3d theta(0.1, 0.2, 0.3);
  const Eigen::MatrixXd a = companion(theta);
  EXPECT_EQ(a, oracle::companion_by_hand(theta));
  EXPECT_THROW(companion(Eigen::VectorXd()), Error);
}

TEST(Roots, KnownPolynomials) {
  // z^2 - 0.5 z + 0.06 = (z - 0.2)(z - 0.3)
  auto report = stability(Eigen::Vector2d(0.5, -0.06));
  ASSERT_EQ(report.root_moduli.size(), 2u);
  EXPECT_NEAR(report.root_moduli[0], 0.3, 1e-12);
  EXPECT_NEAR(report.root_moduli[1], 0.2, 1e-12);
  EXPECT_TRUE(report.stable);

  // z^2 + 0.81: roots +-0.9i
  report = stability(Eigen::Vector2d(0.0, -0.81));
  EXPECT_NEAR(report.root_moduli[0], 0.9, 1e-12);
  EXPECT_NEAR(report.root_moduli[1], 0.9, 1e-12);

  // Trailing zeros deflate to exact zero roots.
  report = stability(Eigen::Vector3d(0.5, 0.0, 0.0));
  EXPECT_NEAR(report.root_moduli[0], 0.5, 1e-14);
  EXPECT_EQ(report.root_moduli[1], 0.0);
  EXPECT_EQ(report.root_moduli[2], 0.0);

  report = stability(Eigen::Vector2d(0.0, 0.0));
  EXPECT_EQ(report.spectral_radius(), 0.0);
}

TEST(Roots, RepeatedRoot) {
  // (z - 0.5)^2 = z^2 - z + 0.25
  const auto report = stability(Eigen::Vector2d(1.0, -0.25));
  EXPECT_NEAR(report.root_moduli[0], 0.5, 1e-7);
  EXPECT_TRUE(report.stable);
}

TEST(Roots, MatchCompanionEigenvalues) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index p = 1 + trial % 6;
    const Eigen::VectorXd theta = oracle::random_stable_theta(p, gen, 1.2);
    const double expected =
        companion(theta).eigenvalues().cwiseAbs().maxCoeff();
    EXPECT_NEAR(stability(theta).spectral_radius(), expected, 1e-8) << theta.transpose();
  }
}

TEST(Stability, Boundary) {
  EXPECT_TRUE(is_stable(Eigen::VectorXd::Constant(1, 0.999)));
  EXPECT_FALSE(is_stable(Eigen::VectorXd::Constant(1, 1.0)));
  EXPECT_FALSE(is_stable(Eigen::VectorXd::Constant(1, -1.0)));
  EXPECT_FALSE(is_stable(Eigen::VectorXd::Constant(1, 1.0 - 1e-10)));
  EXPECT_FALSE(is_stable(Eigen::Vector2d(0.5, 0.6)));
  EXPECT_THROW(require_stable(Eigen::Vector2d(1.2, 0.0)), Error);
  EXPECT_THROW(stability(Eigen::Vector2d(NAN, 0.0)), Error);
  try {
    require_stable(Eigen::VectorXd::Constant(1, 1.5));
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Unstable);
  }
}

TEST(Lyapunov, SolvesEquation) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index p = 1 + trial % 4;
    const Eigen::MatrixXd a = companion(oracle::random_stable_theta(p, gen));
    Eigen::MatrixXd q = Eigen::MatrixXd::Random(p, p);
    q = q * q.transpose() + Eigen::MatrixXd::Identity(p, p);
    const Eigen::MatrixXd x = discrete_lyapunov(a, q);
    EXPECT_LE((x - a * x * a.transpose() - q).norm(), 1e-9 * x.norm());
  }
}

TEST(FisherInfo, ScalarClosedForm) {
  for (double t : {-0.9, -0.3, 0.0, 0.5, 0.95}) {
    const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, t);
    EXPECT_NEAR(fisher_info(theta)(0, 0), 1.0 / (1.0 - t * t), 1e-12);
    EXPECT_NEAR(stationary_information(theta)(0, 0), 1.0 / (1.0 - t * t), 1e-12);
    EXPECT_NEAR(fisher_info_inverse(theta)(0, 0), 1.0 - t * t, 1e-12);
  }
}

TEST(FisherInfo, MatchesTruncatedSeries) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index p = 2 + trial % 2;
    const Eigen::VectorXd theta = oracle::random_stable_theta(p, gen, 0.9);
    const Eigen::MatrixXd expected = oracle::lyapunov_series(companion(theta), 500);
    EXPECT_LE((fisher_info(theta) - expected).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(FisherInfo, Ar2Values) {
  const Eigen::Vector2d theta(0.5, 0.3);
  const Eigen::MatrixXd i = fisher_info(theta);
  EXPECT_NEAR(i(0, 0), 2.2435897435897436, 1e-12);
  EXPECT_NEAR(i(0, 1), 0.4807692307692308, 1e-12);
  EXPECT_NEAR(i(1, 1), 0.2019230769230769, 1e-12);
  // Stationary covariance of (X_n, X_{n-1}): Toeplitz in gamma(0), gamma(1).
  const Eigen::MatrixXd g = stationary_information(theta);
  const double g0 = (1.0 - 0.3) / ((1.0 + 0.3) * ((1.0 - 0.3) * (1.0 - 0.3) - 0.25));
  const double g1 = 0.5 * g0 / (1.0 - 0.3);
  EXPECT_NEAR(g(0, 0), g0, 1e-12);
  EXPECT_NEAR(g(1, 1), g0, 1e-12);
  EXPECT_NEAR(g(0, 1), g1, 1e-12);
  EXPECT_NEAR(i(0, 0), g(0, 0), 1e-12);
}

TEST(FisherInfo, PositiveDefiniteAndSymmetric) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::VectorXd theta = oracle::random_stable_theta(1 + trial % 5, gen);
    for (const Eigen::MatrixXd& m : {fisher_info(theta), stationary_information(theta)}) {
      EXPECT_EQ(m, m.transpose());
      EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().minCoeff(), 0.0);
    }
  }
}

TEST(FisherInfo, RejectsUnstable) {
  EXPECT_THROW(fisher_info(Eigen::VectorXd::Constant(1, 1.0)), Error);
  EXPECT_THROW(stationary_information(Eigen::Vector2d(0.6, 0.6)), Error);
}

TEST(SpdInverse, RejectsIndefinite) {
  Eigen::Matrix2d m;
  m << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(spd_inverse(m), Error);
  Eigen::Matrix2d s;
  s << 2.0, 0.5, 0.5, 1.0;
  EXPECT_LE((spd_inverse(s) * s - Eigen::Matrix2d::Identity()).norm(), 1e-14);
}

TEST(Templates, LongDoubleRoots) {
  Eigen::Matrix<long double, 2, 1> theta(0.5L, -0.06L);
  const auto report = stability(theta);
  EXPECT_NEAR(static_cast<double>(report.root_moduli[0]), 0.3, 1e-14);
  const auto info = fisher_info(theta);
  EXPECT_NEAR(static_cast<double>(info(0, 0)), fisher_info(Eigen::Vector2d(0.5, -0.06))(0, 0), 1e-12);
}

}  // namespace
}  // namespace armle
