#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "armle/covariance.hpp"
#include "armle/rng.hpp"

namespace armle {

/// Outcome of running the Durbin-Levinson recursion on a kernel up to a
/// horizon.
struct ValidationReport {
  std::size_t horizon = 0;
  double min_sigma2 = 1.0;
  double max_abs_beta = 0.0;
  /// Fitted alpha in beta_n^2 ~ n^{-alpha} over the last three quarters of the
  /// horizon. Empty when the tail partial autocorrelations vanish.
  std::optional<double> decay_exponent;
  /// Median of n |beta_n| over the same window.
  double tail_constant = 0.0;
  /// beta_n^2 = O(n^{-alpha}) with alpha > 1 holds on the window.
  bool summable_decay = true;
  /// tail_constant above kSlowDecayThreshold.
  bool slow_decay = false;
  bool passed = true;

  static constexpr double kSlowDecayThreshold = 0.25;
};

/// Throws NotPositiveDefinite(n) when sigma_n^2 <= kPositiveDefiniteEps.
ValidationReport validate_kernel(const CovarianceKernel& kernel, std::size_t horizon);

struct NoisePath {
  std::vector<double> values;
  /// The standard normal draws that produced `values`.
  std::vector<double> innovations;
  CovarianceKernel kernel;
  std::uint64_t seed = 0;
};

/// Exact stationary path: xi_m = (best linear prediction from xi_1..xi_{m-1})
/// + sigma_m eps_m, with eps drawn from `rng`.
NoisePath sample_noise(const CovarianceKernel& kernel, std::size_t n, Rng& rng);
NoisePath sample_noise(const CovarianceKernel& kernel, std::size_t n, std::uint64_t seed);

}  // namespace armle
