#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "armle/covariance.hpp"
#include "armle/noise_models.hpp"
#include "armle/rng.hpp"

namespace armle {

struct SimulatedSeries {
  std::vector<double> x;
  NoisePath noise;
};

/// X_n = sum_i theta_i X_{n-i} + xi_n for n = 1..len with X_k = 0 for k <= 0.
/// Requires a stable theta.
SimulatedSeries simulate_ar(const Eigen::VectorXd& theta, const CovarianceKernel& kernel,
                            std::size_t len, Rng& rng);
SimulatedSeries simulate_ar(const Eigen::VectorXd& theta, const CovarianceKernel& kernel,
                            std::size_t len, std::uint64_t seed);

/// Runs the AR recursion on a given noise path.
std::vector<double> ar_filter(const Eigen::VectorXd& theta, std::span<const double> noise);

}  // namespace armle
