#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "armle/distributions.hpp"
#include "armle/rng.hpp"
#include "oracles.hpp"

namespace armle {
namespace {

TEST(Chi2, ReferenceValues) {
  EXPECT_NEAR(chi2_quantile(1, 0.05), 3.8414588206941285, 1e-9);
  EXPECT_NEAR(chi2_quantile(2, 0.05), 5.991464547107983, 1e-9);
  EXPECT_NEAR(chi2_quantile(3, 0.01), 11.344866730144368, 1e-9);
  EXPECT_NEAR(chi2_cdf(5, 2.5), 0.22350492887667728, 1e-12);
  EXPECT_NEAR(chi2_sf(10, 30.0), 0.000856641210775301, 1e-14);
}

TEST(Chi2, OneDegreeMatchesErfc) {
  for (double x : {0.001, 0.1, 1.0, 3.84, 10.0, 40.0}) {
    EXPECT_NEAR(chi2_sf(1, x), oracle::chi2_1_sf(x), 1e-13 + 1e-11 * oracle::chi2_1_sf(x));
  }
}

TEST(Chi2, TwoDegreesIsExponential) {
  for (double x : {0.5, 2.0, 9.0}) EXPECT_NEAR(chi2_sf(2, x), std::exp(-x / 2.0), 1e-13);
}

TEST(Chi2, QuantileInvertsSurvival) {
  for (int dof = 1; dof <= 6; ++dof) {
    for (double alpha : {0.001, 0.01, 0.05, 0.5, 0.9}) {
      EXPECT_NEAR(chi2_sf(dof, chi2_quantile(dof, alpha)), alpha, 1e-11);
    }
  }
  EXPECT_THROW(chi2_quantile(0, 0.05), std::exception);
  EXPECT_THROW(chi2_quantile(1, 0.0), std::exception);
  EXPECT_THROW(chi2_quantile(1, 1.0), std::exception);
}

TEST(Chi2, EdgeValues) {
  EXPECT_EQ(chi2_cdf(3, 0.0), 0.0);
  EXPECT_EQ(chi2_sf(3, 0.0), 1.0);
  EXPECT_EQ(regularized_gamma_p(2.0, 0.0), 0.0);
  EXPECT_NEAR(regularized_gamma_p(3.0, 4.0) + regularized_gamma_q(3.0, 4.0), 1.0, 1e-15);
}

TEST(NoncentralChi2, References) {
  const double crit1 = 3.8414588206941285;
  EXPECT_NEAR(noncentral_chi2_sf(1, 4.0, crit1), 0.5160052739761744, 1e-10);
  EXPECT_NEAR(noncentral_chi2_sf(3, 2.5, 7.814727903251178), 0.23300226480004163, 1e-10);
  for (double lambda : {0.0, 0.5, 4.0, 20.0}) {
    EXPECT_NEAR(noncentral_chi2_sf(1, lambda, crit1), oracle::noncentral_chi2_1_sf(lambda, crit1), 1e-10);
  }
  EXPECT_NEAR(noncentral_chi2_sf(2, 0.0, 3.0), chi2_sf(2, 3.0), 1e-14);
}

TEST(Normal, CdfAndQuantile) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-16);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
  EXPECT_NEAR(normal_upper_quantile(0.025), 1.959963984540054, 1e-9);
  EXPECT_NEAR(normal_upper_quantile(0.5), 0.0, 1e-9);
}

TEST(Ks, PvalueReference) {
  // Large-n limit is the Kolmogorov distribution.
  EXPECT_NEAR(ks_pvalue(1.0 / std::sqrt(1e8), 100000000), 0.26999967167735456, 1e-4);
  EXPECT_GT(ks_pvalue(0.01, 100), 0.99);
  EXPECT_LT(ks_pvalue(0.5, 100), 1e-10);
}

TEST(Ks, StatisticOfKnownSample) {
  const std::vector<double> sample{0.1, 0.4, 0.7};
  const double d = ks_statistic(sample, [](double x) { return x; });
  // Uniform cdf: max(1/3 - 0.1, 0.4 - 1/3, 2/3 - 0.4, 0.7 - 2/3, 1 - 0.7) = 0.3.
  EXPECT_NEAR(d, 0.3, 1e-15);
}

TEST(Ks, NormalSampleIsAccepted) {
  Rng rng(3);
  std::vector<double> sample(5000);
  for (double& v : sample) v = rng.normal();
  const double d = ks_statistic(sample, normal_cdf);
  EXPECT_GT(ks_pvalue(d, sample.size()), 0.01);
  for (double& v : sample) v += 0.2;
  EXPECT_LT(ks_pvalue(ks_statistic(sample, normal_cdf), sample.size()), 1e-6);
}

TEST(Rng, DeterministicAndIndependentStreams) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
  Rng s0 = Rng::substream(42, 0);
  Rng s1 = Rng::substream(42, 1);
  int equal = 0;
  for (int i = 0; i < 100; ++i) equal += s0.uniform() == s1.uniform();
  EXPECT_EQ(equal, 0);
  EXPECT_NE(splitmix64(0), splitmix64(1));
}

TEST(Rng, UniformRangeAndMoments) {
  Rng rng(9);
  double sum = 0.0;
  double sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.01);
}

}  // namespace
}  // namespace armle
