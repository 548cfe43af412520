#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "armle/innovations_filter.hpp"
#include "armle/noise_models.hpp"
#include "oracles.hpp"

namespace armle {
namespace {

std::vector<CovarianceKernel> families() {
  return {CovarianceKernel::white(), CovarianceKernel::ar1(0.5), CovarianceKernel::ar1(-0.8),
          CovarianceKernel::fgn(0.3), CovarianceKernel::fgn(0.7), CovarianceKernel::fgn(0.95)};
}

TEST(Advance, WhiteNoiseIsIdentityFilter) {
  const auto k = CovarianceKernel::white();
  auto state = initial_filter_state<double>(k);
  for (int step = 0; step < 20; ++step) {
    advance_in_place(state, k);
    EXPECT_EQ(state.beta.back(), 0.0);
    EXPECT_EQ(state.current_sigma2(), 1.0);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state.n));
    expected(expected.size() - 1) = 1.0;
    EXPECT_EQ(state.row, expected);
  }
}

TEST(Advance, Ar1FirstSteps) {
  const double a = 0.6;
  const auto k = CovarianceKernel::ar1(a);
  const auto s1 = initial_filter_state<double>(k);
  const auto s2 = advance(s1, k);
  // 2x2 Toeplitz solve: predictor of xi_2 from xi_1 is a xi_1.
  ASSERT_EQ(s2.beta.size(), 1u);
  EXPECT_NEAR(s2.beta[0], a, 1e-15);
  EXPECT_NEAR(s2.current_sigma2(), 1.0 - a * a, 1e-15);
  EXPECT_NEAR(s2.k(1), -a, 1e-15);
  EXPECT_EQ(s2.k(2), 1.0);
  // The original state is untouched.
  EXPECT_EQ(s1.n, 1u);

  const auto s3 = advance(s2, k);
  EXPECT_NEAR(s3.beta[1], 0.0, 1e-15);
  EXPECT_NEAR(s3.current_sigma2(), 1.0 - a * a, 1e-15);
}

TEST(Advance, DegenerateKernelThrows) {
  const auto k = CovarianceKernel::ar1(1.0 - 1e-13);
  auto state = initial_filter_state<double>(k);
  EXPECT_THROW(advance_in_place(state, k), Degenerate);
}

TEST(Advance, StateInvariantsHoldEveryStep) {
  for (const auto& k : families()) {
    auto state = initial_filter_state<double>(k);
    double product = 1.0;
    for (std::size_t n = 2; n <= 300; ++n) {
      advance_in_place(state, k);
      ASSERT_EQ(state.n, n);
      EXPECT_EQ(state.k(n), 1.0);
      EXPECT_EQ(state.beta[n - 2], -state.k(1));
      EXPECT_LT(std::abs(state.beta[n - 2]), 1.0);
      product *= 1.0 - state.beta[n - 2] * state.beta[n - 2];
      EXPECT_NEAR(state.sigma2[n - 1], product, 1e-12 * static_cast<double>(n));
      EXPECT_LE(state.sigma2[n - 1], state.sigma2[n - 2]);
      EXPECT_GT(state.sigma2[n - 1], 0.0);
    }
  }
}

TEST(Advance, MatchesDenseToeplitzSolve) {
  for (const auto& k : families()) {
    const auto rows = kernel_rows<double>(k, 50);
    const auto seq = pacf_sequence<double>(k, 50);
    for (Eigen::Index n = 1; n <= 50; ++n) {
      const Eigen::VectorXd expected = oracle::predictor_row(k, n);
      const Eigen::VectorXd& got = rows[static_cast<std::size_t>(n - 1)];
      EXPECT_LE((got - expected).norm(), 1e-10 * expected.norm()) << k.name() << " n=" << n;
      const double var = oracle::prediction_variance(k, n);
      EXPECT_NEAR(seq.sigma2[static_cast<std::size_t>(n - 1)], var, 1e-10 * var) << k.name();
    }
  }
}

TEST(Advance, LongDoubleAgreesWithDouble) {
  const auto k = CovarianceKernel::fgn(0.8);
  const auto d = pacf_sequence<double>(k, 200);
  const auto ld = pacf_sequence<long double>(k, 200);
  for (std::size_t i = 0; i < 200; ++i) {
    EXPECT_NEAR(d.beta[i], static_cast<double>(ld.beta[i]), 1e-11);
    EXPECT_NEAR(d.sigma2[i], static_cast<double>(ld.sigma2[i]), 1e-12);
  }
}

TEST(KernelRows, Examples) {
  const auto white = kernel_rows<double>(CovarianceKernel::white(), 3);
  ASSERT_EQ(white.size(), 3u);
  EXPECT_EQ(white[0], Eigen::VectorXd::Ones(1));
  EXPECT_EQ(white[1], Eigen::Vector2d(0.0, 1.0));
  EXPECT_EQ(white[2], Eigen::Vector3d(0.0, 0.0, 1.0));

  const auto ar = kernel_rows<double>(CovarianceKernel::ar1(0.5), 2);
  EXPECT_NEAR(ar[1](0), -0.5, 1e-15);
  EXPECT_EQ(ar[1](1), 1.0);
}

TEST(KernelRows, PredictionErrorIdentity) {
  for (const auto& k : families()) {
    const auto rows = kernel_rows<double>(k, 60);
    const auto seq = pacf_sequence<double>(k, 60);
    for (Eigen::Index m = 1; m <= 60; ++m) {
      const auto& row = rows[static_cast<std::size_t>(m - 1)];
      double dot = 0.0;
      for (Eigen::Index i = 1; i <= m; ++i) dot += row(i - 1) * k(m - i);
      const double s2 = seq.sigma2[static_cast<std::size_t>(m - 1)];
      EXPECT_NEAR(dot, s2, 1e-12) << k.name() << " m=" << m;
      EXPECT_NEAR(s2, oracle::prediction_variance(k, m), 1e-10);
    }
  }
}

TEST(Whiten, WhiteIsIdentity) {
  const std::vector<double> xi{0.3, -1.2, 2.5, 0.0, 0.7};
  const auto w = whiten<double>(xi, CovarianceKernel::white());
  for (std::size_t i = 0; i < xi.size(); ++i) {
    EXPECT_EQ(w.eps(static_cast<Eigen::Index>(i)), xi[i]);
    EXPECT_EQ(w.sigma(static_cast<Eigen::Index>(i)), 1.0);
  }
}

TEST(Whiten, PerfectlyPredictedValueHasZeroInnovation) {
  const double a = 0.4;
  const std::vector<double> xi{1.0, a};
  const auto w = whiten<double>(xi, CovarianceKernel::ar1(a));
  EXPECT_EQ(w.eps(0), 1.0);
  EXPECT_NEAR(w.eps(1), 0.0, 1e-16);
  EXPECT_NEAR(w.sigma(1), std::sqrt(1.0 - a * a), 1e-15);
}

TEST(Whiten, ZerosStayZero) {
  const std::vector<double> xi(25, 0.0);
  for (const auto& k : families()) {
    const auto w = whiten<double>(xi, k);
    EXPECT_EQ(w.eps.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Whiten, RejectsEmptyInput) {
  EXPECT_THROW(whiten<double>(std::vector<double>{}, CovarianceKernel::white()), Error);
}

TEST(Whiten, OutputIsUncorrelated) {
  const auto k = CovarianceKernel::fgn(0.7);
  const auto path = sample_noise(k, 10000, 5);
  const auto w = whiten<double>(path.values, k);
  const Eigen::VectorXd& e = w.eps;
  const double n = static_cast<double>(e.size());
  const double lag1 = e.head(e.size() - 1).dot(e.tail(e.size() - 1)) / e.squaredNorm();
  EXPECT_LT(std::abs(lag1), 4.0 / std::sqrt(n));
  EXPECT_NEAR(e.squaredNorm() / n, 1.0, 0.05);
}

}  // namespace
}  // namespace armle
