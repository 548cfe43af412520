#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "armle/estimator.hpp"
#include "armle/simulate.hpp"
#include "oracles.hpp"

namespace armle {
namespace {

TEST(Mle, WhiteNoiseEqualsOls) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index p = 1 + trial % 3;
    const Eigen::VectorXd theta = oracle::random_stable_theta(p, gen, 0.9);
    const auto sim = simulate_ar(theta, CovarianceKernel::white(), 300, 50 + static_cast<std::uint64_t>(trial));
    const auto est = mle(build_zeta<double>(sim.x, CovarianceKernel::white(), p));
    const Eigen::VectorXd ols = oracle::ols_ar(sim.x, p);
    EXPECT_LE((est.theta_hat - ols).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + ols.norm()));
  }
}

TEST(Mle, MaximizesLikelihood) {
  const Eigen::Vector2d theta(0.5, -0.2);
  const auto k = CovarianceKernel::fgn(0.75);
  const auto sim = simulate_ar(theta, k, 800, 3);
  const auto path = build_zeta<double>(sim.x, k, 2);
  const auto est = mle(path);
  const double best = log_likelihood(path, est.theta_hat);
  std::mt19937_64 gen(2);
  std::normal_distribution<double> nd(0.0, 0.05);
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector2d other = est.theta_hat + Eigen::Vector2d(nd(gen), nd(gen));
    EXPECT_LT(log_likelihood(path, other), best);
  }
  // Score vanishes at the estimate.
  EXPECT_LE(accumulate(path).score(est.theta_hat).norm(), 1e-9 * accumulate(path).moment.norm());
}

TEST(Mle, SingularGramOnZeroData) {
  const std::vector<double> zeros(50, 0.0);
  const auto path = build_zeta<double>(zeros, CovarianceKernel::ar1(0.4), 2);
  try {
    mle(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SingularGram);
  }
}

TEST(Mle, StandardErrorsFromGram) {
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.5);
  const auto sim = simulate_ar(theta, CovarianceKernel::white(), 2000, 10);
  const auto est = mle(build_zeta<double>(sim.x, CovarianceKernel::white(), 1));
  EXPECT_NEAR(est.standard_errors()(0), std::sqrt(1.0 / (est.gram_over_n(0, 0) * 2000.0)), 1e-15);
  EXPECT_NEAR(est.standard_errors()(0), std::sqrt((1.0 - 0.25) / 2000.0), 0.002);
  EXPECT_EQ(est.n, 2000);
  EXPECT_GE(est.cond, 1.0);
}

TEST(LrStatistic, EqualsQuadraticFormInScore) {
  std::mt19937_64 gen(4);
  const std::vector<CovarianceKernel> kernels{CovarianceKernel::white(), CovarianceKernel::ar1(0.5),
                                              CovarianceKernel::fgn(0.7)};
  for (int trial = 0; trial < 15; ++trial) {
    const Eigen::Index p = 1 + trial % 3;
    const auto& k = kernels[static_cast<std::size_t>(trial) % kernels.size()];
    const Eigen::VectorXd theta = oracle::random_stable_theta(p, gen, 0.8);
    const auto sim = simulate_ar(theta, k, 600, 70 + static_cast<std::uint64_t>(trial));
    const auto path = build_zeta<double>(sim.x, k, p);
    const auto acc = accumulate(path);
    const Eigen::VectorXd m = acc.score(theta);
    const double quad = m.dot(acc.gram.ldlt().solve(m));
    const double lr = lr_statistic(path, theta);
    EXPECT_NEAR(lr, quad, 1e-8 * (1.0 + quad));
    EXPECT_GE(lr, -1e-10);
  }
}

TEST(LrTest, Fields) {
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.3);
  const auto k = CovarianceKernel::ar1(0.5);
  const auto sim = simulate_ar(theta, k, 1000, 6);
  const auto path = build_zeta<double>(sim.x, k, 1);
  const auto result = lr_test(path, theta, 0.05);
  EXPECT_EQ(result.dof, 1);
  EXPECT_NEAR(result.critical, 3.8414588206941285, 1e-9);
  EXPECT_EQ(result.reject, result.statistic >= result.critical);
  EXPECT_NEAR(result.pvalue, oracle::chi2_1_sf(result.statistic), 1e-10);
  const auto far = lr_test(path, Eigen::VectorXd::Constant(1, -0.5), 0.05);
  EXPECT_TRUE(far.reject);
  EXPECT_LT(far.pvalue, 1e-10);
  EXPECT_THROW(lr_test(path, theta, 0.0), Error);
  EXPECT_THROW(lr_test(path, theta, 1.0), Error);
  EXPECT_THROW(lr_test(path, Eigen::Vector2d(0.1, 0.1), 0.05), Error);
}

TEST(Lan, IdentityHoldsExactly) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index p = 1 + trial % 3;
    const CovarianceKernel k = trial % 2 == 0 ? CovarianceKernel::fgn(0.65) : CovarianceKernel::ar1(-0.4);
    const Eigen::VectorXd theta = oracle::random_stable_theta(p, gen, 0.7);
    const auto sim = simulate_ar(theta, k, 500, 90 + static_cast<std::uint64_t>(trial));
    const auto path = build_zeta<double>(sim.x, k, p);
    Eigen::VectorXd u(p);
    for (Eigen::Index i = 0; i < p; ++i) u(i) = nd(gen);
    const auto terms = lan_decomposition(path, theta, u);
    const Eigen::VectorXd shifted = theta + u / std::sqrt(500.0);
    const double diff = log_likelihood(path, shifted) - log_likelihood(path, theta);
    EXPECT_NEAR(terms.total(), diff, 1e-9 * (1.0 + std::abs(diff)));
    // The split does not depend on which information matrix is supplied.
    const auto other = lan_decomposition(path, theta, u, Eigen::MatrixXd::Identity(p, p));
    EXPECT_NEAR(other.total(), diff, 1e-9 * (1.0 + std::abs(diff)));
    EXPECT_NEAR(other.score_term, terms.score_term, 1e-12 * (1.0 + std::abs(terms.score_term)));
  }
}

TEST(Lan, RejectsBadShapesAndUnstableShift) {
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.9);
  const auto sim = simulate_ar(theta, CovarianceKernel::white(), 100, 1);
  const auto path = build_zeta<double>(sim.x, CovarianceKernel::white(), 1);
  EXPECT_THROW(lan_decomposition(path, theta, Eigen::Vector2d(1.0, 1.0)), Error);
  EXPECT_THROW(lan_decomposition(path, theta, Eigen::VectorXd::Constant(1, 2.0)), Error);
}

TEST(Ellipsoid, ContainsCenterAndMatchesRadius) {
  const Eigen::Vector2d theta(0.4, 0.2);
  const auto k = CovarianceKernel::ar1(0.3);
  const auto sim = simulate_ar(theta, k, 1500, 12);
  const auto est = mle(build_zeta<double>(sim.x, k, 2));
  for (auto plugin : {InformationPlugin::EmpiricalGram, InformationPlugin::ModelAtEstimate}) {
    const auto ell = confidence_ellipsoid(est, 0.05, plugin);
    EXPECT_TRUE(ell.contains(est.theta_hat));
    EXPECT_NEAR(ell.radius * ell.radius, 5.991464547107983, 1e-9);
    const Eigen::VectorXd hw = ell.half_widths();
    Eigen::VectorXd edge = est.theta_hat;
    edge(0) += hw(0) * 1.01;
    EXPECT_FALSE(ell.contains(edge));
  }
  const auto gram = confidence_ellipsoid(est, 0.05);
  EXPECT_LE((gram.shape - 1500.0 * est.gram_over_n).norm(), 1e-9 * gram.shape.norm());
}

TEST(Ellipsoid, CoverageNearNominal) {
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.5);
  const auto k = CovarianceKernel::fgn(0.7);
  int covered = 0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    Rng rng = Rng::substream(77, static_cast<std::uint64_t>(r));
    const auto sim = simulate_ar(theta, k, 400, rng);
    const auto est = mle(build_zeta<double>(sim.x, k, 1));
    if (confidence_ellipsoid(est, 0.1).contains(theta)) ++covered;
  }
  // Binomial(400, 0.9) has standard deviation 0.015.
  EXPECT_NEAR(covered / static_cast<double>(reps), 0.9, 0.05);
}

}  // namespace
}  // namespace armle
