#include "armle/noise_models.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

#include "armle/innovations_filter.hpp"

namespace armle {

ValidationReport validate_kernel(const CovarianceKernel& kernel, std::size_t horizon) {
  if (horizon < 2) throw Error(ErrorKind::InvalidArgument, "validation horizon must be >= 2");
  ValidationReport report;
  report.horizon = horizon;

  auto state = initial_filter_state<double>(kernel);
  for (std::size_t m = 1; m < horizon; ++m) {
    try {
      advance_in_place(state, kernel);
    } catch (const Degenerate& e) {
      throw NotPositiveDefinite(e.step() + 1);
    }
    if (!(state.current_sigma2() > kPositiveDefiniteEps)) throw NotPositiveDefinite(state.n);
  }
  const auto& beta = state.beta;
  report.min_sigma2 = *std::min_element(state.sigma2.begin(), state.sigma2.end());
  for (double b : beta) report.max_abs_beta = std::max(report.max_abs_beta, std::abs(b));

  // Tail window [h/4, h-1] of beta_1..beta_{h-1}.
  const std::size_t last = beta.size();
  const std::size_t first = std::max<std::size_t>(1, last / 4);
  std::vector<double> log_n;
  std::vector<double> log_b2;
  std::vector<double> scaled;
  for (std::size_t j = first; j <= last; ++j) {
    const double b = std::abs(beta[j - 1]);
    scaled.push_back(static_cast<double>(j) * b);
    if (b > 1e-14) {
      log_n.push_back(std::log(static_cast<double>(j)));
      log_b2.push_back(2.0 * std::log(b));
    }
  }
  if (!scaled.empty()) {
    auto mid = scaled.begin() + static_cast<std::ptrdiff_t>(scaled.size() / 2);
    std::nth_element(scaled.begin(), mid, scaled.end());
    report.tail_constant = *mid;
  }
  // Fit only when most of the window carries nonzero partial correlations.
  if (log_n.size() >= 3 && 2 * log_n.size() >= scaled.size()) {
    const Eigen::Index k = static_cast<Eigen::Index>(log_n.size());
    const Eigen::Map<const Eigen::VectorXd> xs(log_n.data(), k);
    const Eigen::Map<const Eigen::VectorXd> ys(log_b2.data(), k);
    const double mx = xs.mean();
    const double my = ys.mean();
    const double slope =
        ((xs.array() - mx) * (ys.array() - my)).sum() / (xs.array() - mx).square().sum();
    report.decay_exponent = -slope;
    report.summable_decay = -slope > 1.0;
  }
  report.slow_decay = report.tail_constant > ValidationReport::kSlowDecayThreshold;
  return report;
}

NoisePath sample_noise(const CovarianceKernel& kernel, std::size_t n, Rng& rng) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "noise path length must be >= 1");
  NoisePath path;
  path.kernel = kernel;
  path.seed = rng.seed();
  path.values.resize(n);
  path.innovations.resize(n);

  auto state = initial_filter_state<double>(kernel);
  for (std::size_t m = 1; m <= n; ++m) {
    if (m > 1) advance_in_place(state, kernel);
    const double eps = rng.normal();
    const auto prev = static_cast<Eigen::Index>(m - 1);
    const Eigen::Map<const Eigen::VectorXd> past(path.values.data(), prev);
    const double filtered_past = state.row.head(prev).dot(past);
    path.innovations[m - 1] = eps;
    path.values[m - 1] = state.current_sigma() * eps - filtered_past;
  }
  return path;
}

NoisePath sample_noise(const CovarianceKernel& kernel, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample_noise(kernel, n, rng);
}

}  // namespace armle
