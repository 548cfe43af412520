#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>

#include <Eigen/Core>

#include "armle/ar_core.hpp"
#include "armle/covariance.hpp"
#include "armle/error.hpp"
#include "armle/innovations_filter.hpp"

namespace armle {

/// Filtered 2p-dimensional process
///
///   zeta_m = (Z_m, sum_{k<m} beta_k Z_k),   Z_m = sum_{i<=m} k(m,i) Y_i,
///
/// with Y_i = (X_i, ..., X_{i-p+1}) and X_k = 0 for k <= 0. It obeys
/// zeta_m = A~_{m-1} zeta_{m-1} + l sigma_m eps_m with zeta_0 = 0, so the
/// likelihood is a Gaussian regression of l^T zeta_m on a_{m-1}^T zeta_{m-1}.
///
/// Storage is 0-based: column m-1 of `zeta` is zeta_m, `sigma(m-1)` is
/// sigma_m, `beta(j-1)` is beta_j for j < n. Column m-1 of `regressors` is
/// a_{m-1}^T zeta_{m-1} (zero for m = 1) and `response(m-1)` is l^T zeta_m.
template <typename Scalar = double>
struct ZetaPath {
  Eigen::Index p = 0;
  Matrix<Scalar> zeta;
  Vector<Scalar> sigma;
  Vector<Scalar> beta;
  Matrix<Scalar> regressors;
  Vector<Scalar> response;

  Eigen::Index size() const { return zeta.cols(); }
  /// beta_{m-1}, with beta_0 = 0.
  Scalar beta_before(Eigen::Index m) const { return m >= 2 ? beta(m - 2) : Scalar(0); }
  /// zeta_m, with zeta_0 = 0.
  Vector<Scalar> state(Eigen::Index m) const {
    return m == 0 ? Vector<Scalar>::Zero(2 * p) : Vector<Scalar>(zeta.col(m - 1));
  }
};

template <typename Scalar = double>
ZetaPath<Scalar> build_zeta(std::span<const Scalar> x, const CovarianceKernel& kernel,
                            Eigen::Index p) {
  if (p < 1) throw Error(ErrorKind::InvalidArgument, "AR order must be >= 1");
  const auto n = static_cast<Eigen::Index>(x.size());
  if (n <= p) {
    throw Error(ErrorKind::TooShort, "need more than p observations, got " + std::to_string(n));
  }
  if (!Eigen::Map<const Vector<Scalar>>(x.data(), n).allFinite()) {
    throw Error(ErrorKind::NonFinite, "observations must be finite");
  }
  const Eigen::Map<const Vector<Scalar>> obs(x.data(), n);

  ZetaPath<Scalar> path;
  path.p = p;
  path.zeta.resize(2 * p, n);
  path.sigma.resize(n);
  path.beta.resize(n - 1);
  path.regressors.resize(p, n);
  path.response.resize(n);

  auto state = initial_filter_state<Scalar>(kernel);
  Vector<Scalar> z(p);
  Vector<Scalar> tail = Vector<Scalar>::Zero(p);
  for (Eigen::Index m = 1; m <= n; ++m) {
    if (m > 1) {
      advance_in_place(state, kernel);
      const Scalar beta_prev = state.beta.back();
      path.beta(m - 2) = beta_prev;
      const auto prev_head = path.zeta.col(m - 2).head(p);
      path.regressors.col(m - 1) = prev_head + beta_prev * tail;
      tail += beta_prev * prev_head;
    } else {
      path.regressors.col(0).setZero();
    }
    // Z_m[j] = sum_{i=j+1}^m k(m,i) X_{i-j}.
    for (Eigen::Index j = 0; j < p; ++j) {
      z(j) = j < m ? state.row.segment(j, m - j).dot(obs.head(m - j)) : Scalar(0);
    }
    path.zeta.col(m - 1).head(p) = z;
    path.zeta.col(m - 1).tail(p) = tail;
    path.sigma(m - 1) = state.current_sigma();
    path.response(m - 1) = z(0);
  }
  return path;
}

/// A~_n = [[A_0, beta_n A_0], [beta_n I_p, I_p]].
template <typename Derived>
Matrix<typename Derived::Scalar> transition(const Eigen::MatrixBase<Derived>& theta,
                                            typename Derived::Scalar beta) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index p = theta.size();
  const Matrix<Scalar> a = companion(theta);
  Matrix<Scalar> t(2 * p, 2 * p);
  t.topLeftCorner(p, p) = a;
  t.topRightCorner(p, p) = beta * a;
  t.bottomLeftCorner(p, p) = beta * Matrix<Scalar>::Identity(p, p);
  t.bottomRightCorner(p, p).setIdentity();
  return t;
}

namespace detail {
template <typename Scalar, typename Derived>
void check_order(const ZetaPath<Scalar>& path, const Eigen::MatrixBase<Derived>& theta) {
  if (theta.size() != path.p) {
    throw Error(ErrorKind::DimensionMismatch, "theta has " + std::to_string(theta.size()) +
                                                  " entries but the path has order " +
                                                  std::to_string(path.p));
  }
}
}  // namespace detail

/// eps_i(theta) = l^T (zeta_i - A~_{i-1} zeta_{i-1}) / sigma_i, i = 1..n.
template <typename Scalar, typename Derived>
Vector<Scalar> innovations_at(const ZetaPath<Scalar>& path,
                              const Eigen::MatrixBase<Derived>& theta) {
  detail::check_order(path, theta);
  return ((path.response.transpose() - theta.transpose() * path.regressors).transpose().array() /
          path.sigma.array())
      .matrix();
}

/// Exact Gaussian log-likelihood of X_1..X_n at theta.
template <typename Scalar, typename Derived>
Scalar log_likelihood(const ZetaPath<Scalar>& path, const Eigen::MatrixBase<Derived>& theta) {
  using std::log;
  const Vector<Scalar> eps = innovations_at(path, theta);
  const Scalar n = Scalar(path.size());
  const Scalar log_two_pi = log(Scalar(2) * std::numbers::pi_v<Scalar>);
  return -Scalar(0.5) * eps.squaredNorm() - Scalar(0.5) * n * log_two_pi -
         path.sigma.array().log().sum();
}

/// Gram <M>_n = sum a^T zeta zeta^T a / sigma^2 and the theta-free moment
/// sum a^T zeta l^T zeta_i / sigma^2, built one observation at a time.
template <typename Scalar = double>
struct MartingaleAccumulator {
  Matrix<Scalar> gram;
  Vector<Scalar> moment;
  Eigen::Index n = 0;

  MartingaleAccumulator() = default;
  explicit MartingaleAccumulator(Eigen::Index p)
      : gram(Matrix<Scalar>::Zero(p, p)), moment(Vector<Scalar>::Zero(p)) {}

  template <typename Derived>
  void add(const Eigen::MatrixBase<Derived>& regressor, Scalar response, Scalar sigma) {
    const Scalar w = Scalar(1) / (sigma * sigma);
    gram.noalias() += w * regressor * regressor.transpose();
    moment.noalias() += (w * response) * regressor;
    ++n;
  }

  /// M_n(theta) = sum a^T zeta eps_i(theta) / sigma_i = moment - gram theta.
  template <typename Derived>
  Vector<Scalar> score(const Eigen::MatrixBase<Derived>& theta) const {
    return moment - gram * theta;
  }
};

/// Accumulator over the first `count` observations of the path.
template <typename Scalar>
MartingaleAccumulator<Scalar> accumulate(const ZetaPath<Scalar>& path, Eigen::Index count) {
  if (count < 0 || count > path.size()) {
    throw Error(ErrorKind::InvalidArgument, "prefix length out of range");
  }
  MartingaleAccumulator<Scalar> acc(path.p);
  for (Eigen::Index i = 0; i < count; ++i) {
    acc.add(path.regressors.col(i), path.response(i), path.sigma(i));
  }
  return acc;
}

template <typename Scalar>
MartingaleAccumulator<Scalar> accumulate(const ZetaPath<Scalar>& path) {
  return accumulate(path, path.size());
}

template <typename Scalar = double>
struct ScoreResult {
  MartingaleAccumulator<Scalar> accumulator;
  Vector<Scalar> score;
};

template <typename Scalar, typename Derived>
ScoreResult<Scalar> accumulate(const ZetaPath<Scalar>& path,
                               const Eigen::MatrixBase<Derived>& theta) {
  detail::check_order(path, theta);
  ScoreResult<Scalar> out{accumulate(path), Vector<Scalar>()};
  out.score = out.accumulator.score(theta);
  return out;
}

}  // namespace armle
