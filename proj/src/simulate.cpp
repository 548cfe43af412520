#include "armle/simulate.hpp"

#include "armle/ar_core.hpp"

namespace armle {

std::vector<double> ar_filter(const Eigen::VectorXd& theta, std::span<const double> noise) {
  const auto p = static_cast<std::size_t>(theta.size());
  std::vector<double> x(noise.size());
  for (std::size_t t = 0; t < noise.size(); ++t) {
    double value = noise[t];
    for (std::size_t i = 1; i <= p && i <= t; ++i) {
      value += theta(static_cast<Eigen::Index>(i - 1)) * x[t - i];
    }
    x[t] = value;
  }
  return x;
}

SimulatedSeries simulate_ar(const Eigen::VectorXd& theta, const CovarianceKernel& kernel,
                            std::size_t len, Rng& rng) {
  require_stable(theta);
  SimulatedSeries out;
  out.noise = sample_noise(kernel, len, rng);
  out.x = ar_filter(theta, out.noise.values);
  return out;
}

SimulatedSeries simulate_ar(const Eigen::VectorXd& theta, const CovarianceKernel& kernel,
                            std::size_t len, std::uint64_t seed) {
  Rng rng(seed);
  return simulate_ar(theta, kernel, len, rng);
}

}  // namespace armle
