#pragma once

#include <functional>
#include <span>

namespace armle {

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);

double chi2_cdf(double dof, double x);
double chi2_sf(double dof, double x);

/// Upper quantile: the x with P(chi2_dof >= x) = alpha, to 1e-10 absolute.
double chi2_quantile(int dof, double alpha);

/// P(chi2_dof(noncentrality) >= x) via the Poisson mixture of central laws.
double noncentral_chi2_sf(double dof, double noncentrality, double x);

double normal_cdf(double x);
/// Upper quantile z with P(N(0,1) >= z) = alpha.
double normal_upper_quantile(double alpha);

/// Kolmogorov-Smirnov distance between the empirical law of `sample` and `cdf`.
double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf);
/// Asymptotic p-value of a one-sample KS distance with Stephens' small-n
/// correction.
double ks_pvalue(double statistic, std::size_t n);

}  // namespace armle
