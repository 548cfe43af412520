#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "armle/covariance.hpp"
#include "armle/error.hpp"

namespace armle {

/// Floor on 1 - beta^2 and on innovation variances.
inline constexpr double kPositiveDefiniteEps = 1e-12;

/// Durbin-Levinson state at step n (1-based).
///
///   sigma_n eps_n = sum_{i=1}^n k(n,i) xi_i,   k(n,n) = 1,   k(n,1) = -beta_{n-1}
///   sigma_{n+1}^2 = sigma_n^2 (1 - beta_n^2)
///
/// `row(i-1)` holds k(n,i). `beta[j-1]` holds beta_j for j < n and
/// `sigma2[j-1]` holds sigma_j^2 for j <= n. `acov` caches r(0..n).
template <typename Scalar>
struct FilterState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  std::size_t n = 1;
  std::vector<Scalar> beta;
  std::vector<Scalar> sigma2{Scalar(1)};
  Vector row = Vector::Ones(1);
  std::vector<Scalar> acov;

  Scalar current_sigma2() const { return sigma2.back(); }
  Scalar current_sigma() const {
    using std::sqrt;
    return sqrt(sigma2.back());
  }
  /// k(n, i) for 1 <= i <= n.
  Scalar k(std::size_t i) const { return row(static_cast<Eigen::Index>(i - 1)); }
};

template <typename Scalar = double>
FilterState<Scalar> initial_filter_state(const CovarianceKernel& kernel) {
  FilterState<Scalar> state;
  state.acov = {covariance<Scalar>(kernel, 0), covariance<Scalar>(kernel, 1)};
  return state;
}

/// Moves `state` from step n to n+1.
template <typename Scalar>
void advance_in_place(FilterState<Scalar>& state, const CovarianceKernel& kernel) {
  using Vector = typename FilterState<Scalar>::Vector;
  const std::size_t m = state.n;
  while (state.acov.size() < m + 2) {
    state.acov.push_back(covariance<Scalar>(kernel, static_cast<std::int64_t>(state.acov.size())));
  }
  const auto len = static_cast<Eigen::Index>(m);
  const Eigen::Map<const Vector> lags(state.acov.data() + 1, len);
  const Scalar beta = state.row.dot(lags) / state.current_sigma2();
  const Scalar keep = Scalar(1) - beta * beta;
  if (!(keep > Scalar(kPositiveDefiniteEps))) throw Degenerate(m);

  Vector next(len + 1);
  next(0) = -beta;
  next(len) = Scalar(1);
  for (Eigen::Index i = 1; i < len; ++i) {
    next(len - i) = state.row(len - 1 - i) - beta * state.row(i - 1);
  }
  state.row.swap(next);
  state.beta.push_back(beta);
  state.sigma2.push_back(state.current_sigma2() * keep);
  state.n = m + 1;
}

template <typename Scalar>
FilterState<Scalar> advance(FilterState<Scalar> state, const CovarianceKernel& kernel) {
  advance_in_place(state, kernel);
  return state;
}

/// Triangular whitening array: element m-1 is the row k(m, 1..m).
template <typename Scalar = double>
std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> kernel_rows(const CovarianceKernel& kernel,
                                                                  std::size_t n) {
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> rows;
  if (n == 0) return rows;
  rows.reserve(n);
  auto state = initial_filter_state<Scalar>(kernel);
  rows.push_back(state.row);
  for (std::size_t m = 2; m <= n; ++m) {
    advance_in_place(state, kernel);
    rows.push_back(state.row);
  }
  return rows;
}

/// beta_1..beta_n and sigma_1^2..sigma_n^2 without materializing the rows.
template <typename Scalar = double>
struct PacfSequence {
  std::vector<Scalar> beta;
  std::vector<Scalar> sigma2;
};

template <typename Scalar = double>
PacfSequence<Scalar> pacf_sequence(const CovarianceKernel& kernel, std::size_t n) {
  PacfSequence<Scalar> out;
  if (n == 0) return out;
  auto state = initial_filter_state<Scalar>(kernel);
  for (std::size_t m = 1; m <= n; ++m) advance_in_place(state, kernel);
  out.beta = std::move(state.beta);
  state.sigma2.pop_back();
  out.sigma2 = std::move(state.sigma2);
  return out;
}

template <typename Scalar = double>
struct WhitenResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eps;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sigma;
};

/// eps_m = (sum_{i<=m} k(m,i) xi_i) / sigma_m.
template <typename Scalar = double>
WhitenResult<Scalar> whiten(std::span<const Scalar> xi, const CovarianceKernel& kernel) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (xi.empty()) throw Error(ErrorKind::TooShort, "whiten needs at least one value");
  const auto n = static_cast<Eigen::Index>(xi.size());
  const Eigen::Map<const Vector> x(xi.data(), n);
  WhitenResult<Scalar> out{Vector(n), Vector(n)};
  auto state = initial_filter_state<Scalar>(kernel);
  for (Eigen::Index m = 1; m <= n; ++m) {
    if (m > 1) advance_in_place(state, kernel);
    const Scalar sigma = state.current_sigma();
    out.sigma(m - 1) = sigma;
    out.eps(m - 1) = state.row.dot(x.head(m)) / sigma;
  }
  return out;
}

}  // namespace armle
