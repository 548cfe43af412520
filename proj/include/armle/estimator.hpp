#pragma once

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "armle/ar_core.hpp"
#include "armle/distributions.hpp"
#include "armle/error.hpp"
#include "armle/state_filter.hpp"

namespace armle {

/// Gram matrices with a larger condition number are treated as singular.
inline constexpr double kGramConditionCap = 1e12;

template <typename Scalar = double>
struct EstimationResult {
  Vector<Scalar> theta_hat;
  Matrix<Scalar> gram_over_n;
  Eigen::Index n = 0;
  Scalar cond = Scalar(0);

  /// Plug-in standard errors sqrt(diag(<M>_n^{-1})).
  Vector<Scalar> standard_errors() const {
    return (spd_inverse(gram_over_n).diagonal() / Scalar(n)).cwiseSqrt();
  }
};

/// Condition number of a symmetric PSD matrix; infinity when it is singular.
template <typename Derived>
typename Derived::Scalar gram_condition(const Eigen::MatrixBase<Derived>& gram) {
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> eig(gram, Eigen::EigenvaluesOnly);
  const Scalar lo = eig.eigenvalues().minCoeff();
  const Scalar hi = eig.eigenvalues().maxCoeff();
  if (!(lo > Scalar(0))) return std::numeric_limits<Scalar>::infinity();
  return hi / lo;
}

/// theta_hat = <M>_n^{-1} moment from a filled accumulator.
template <typename Scalar>
EstimationResult<Scalar> mle(const MartingaleAccumulator<Scalar>& acc) {
  const Scalar cond = gram_condition(acc.gram);
  if (!(cond <= Scalar(kGramConditionCap))) {
    throw SingularGram("Gram matrix is singular or ill-conditioned (cond " +
                           std::to_string(static_cast<double>(cond)) + ")",
                       static_cast<double>(cond));
  }
  Eigen::LLT<Matrix<Scalar>> llt(acc.gram);
  if (llt.info() != Eigen::Success) {
    throw SingularGram("Gram matrix is not positive definite", static_cast<double>(cond));
  }
  EstimationResult<Scalar> out;
  out.theta_hat = llt.solve(acc.moment);
  out.gram_over_n = acc.gram / Scalar(acc.n);
  out.n = acc.n;
  out.cond = cond;
  return out;
}

template <typename Scalar>
EstimationResult<Scalar> mle(const ZetaPath<Scalar>& path) {
  return mle(accumulate(path));
}

/// 2 (log L(theta_hat) - log L(theta0)).
template <typename Scalar, typename Derived>
Scalar lr_statistic(const ZetaPath<Scalar>& path, const Eigen::MatrixBase<Derived>& theta0) {
  detail::check_order(path, theta0);
  const auto est = mle(path);
  return Scalar(2) * (log_likelihood(path, est.theta_hat) - log_likelihood(path, theta0));
}

struct TestResult {
  double statistic = 0.0;
  double critical = 0.0;
  double alpha = 0.0;
  int dof = 0;
  bool reject = false;
  double pvalue = 1.0;
};

/// Likelihood-ratio test of theta = theta0, rejecting when the statistic
/// reaches the upper alpha-quantile of chi2_p.
template <typename Scalar, typename Derived>
TestResult lr_test(const ZetaPath<Scalar>& path, const Eigen::MatrixBase<Derived>& theta0,
                   double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "level must lie in (0, 1)");
  }
  TestResult out;
  out.dof = static_cast<int>(path.p);
  out.alpha = alpha;
  out.statistic = static_cast<double>(lr_statistic(path, theta0));
  out.critical = chi2_quantile(out.dof, alpha);
  out.reject = out.statistic >= out.critical;
  out.pvalue = chi2_sf(out.dof, out.statistic);
  return out;
}

template <typename Scalar = double>
struct LanTerms {
  Scalar score_term = Scalar(0);   // <u, M_n / sqrt(n)>
  Scalar info_term = Scalar(0);    // -1/2 <u, I u>
  Scalar remainder = Scalar(0);    // -1/2 <u, (<M>_n / n - I) u>
  Scalar total() const { return score_term + info_term + remainder; }
};

/// Splits log L(theta0 + u / sqrt(n)) - log L(theta0) into score, information
/// and remainder terms. `information` is the limit matrix I(theta0).
template <typename Scalar, typename DerivedT, typename DerivedU, typename DerivedI>
LanTerms<Scalar> lan_decomposition(const ZetaPath<Scalar>& path,
                                   const Eigen::MatrixBase<DerivedT>& theta0,
                                   const Eigen::MatrixBase<DerivedU>& u,
                                   const Eigen::MatrixBase<DerivedI>& information) {
  using std::sqrt;
  detail::check_order(path, theta0);
  if (u.size() != path.p || information.rows() != path.p || information.cols() != path.p) {
    throw Error(ErrorKind::DimensionMismatch, "local shift or information has the wrong size");
  }
  const Scalar n = Scalar(path.size());
  const Vector<Scalar> shifted = theta0 + u / sqrt(n);
  require_stable(theta0);
  require_stable(shifted);
  const auto acc = accumulate(path);
  LanTerms<Scalar> out;
  out.score_term = u.dot(acc.score(theta0)) / sqrt(n);
  out.info_term = -Scalar(0.5) * u.dot(information * u);
  out.remainder = -Scalar(0.5) * u.dot((acc.gram / n - information) * u);
  return out;
}

/// Uses the stationary information of theta0 as I(theta0).
template <typename Scalar, typename DerivedT, typename DerivedU>
LanTerms<Scalar> lan_decomposition(const ZetaPath<Scalar>& path,
                                   const Eigen::MatrixBase<DerivedT>& theta0,
                                   const Eigen::MatrixBase<DerivedU>& u) {
  detail::check_order(path, theta0);
  return lan_decomposition(path, theta0, u, stationary_information(theta0));
}

enum class InformationPlugin {
  /// <M>_n / n
  EmpiricalGram,
  /// stationary information evaluated at theta_hat
  ModelAtEstimate,
};

template <typename Scalar = double>
struct ConfidenceEllipsoid {
  Vector<Scalar> center;
  /// n times the plug-in information; the region is
  /// (theta - center)^T shape (theta - center) <= radius^2.
  Matrix<Scalar> shape;
  Scalar radius = Scalar(0);

  template <typename Derived>
  bool contains(const Eigen::MatrixBase<Derived>& theta) const {
    const Vector<Scalar> d = theta - center;
    return d.dot(shape * d) <= radius * radius;
  }

  /// Half-length of the ellipsoid's shadow on each coordinate axis.
  Vector<Scalar> half_widths() const {
    return (spd_inverse(shape).diagonal()).cwiseSqrt() * radius;
  }
};

template <typename Scalar>
ConfidenceEllipsoid<Scalar> confidence_ellipsoid(
    const EstimationResult<Scalar>& result, double alpha,
    InformationPlugin plugin = InformationPlugin::EmpiricalGram) {
  using std::sqrt;
  ConfidenceEllipsoid<Scalar> out;
  out.center = result.theta_hat;
  const Matrix<Scalar> info = plugin == InformationPlugin::EmpiricalGram
                                  ? result.gram_over_n
                                  : stationary_information(result.theta_hat);
  if (!(gram_condition(info) <= Scalar(kGramConditionCap))) {
    throw SingularGram("information plug-in is singular", 0.0);
  }
  out.shape = Scalar(result.n) * info;
  out.radius = sqrt(Scalar(chi2_quantile(static_cast<int>(result.theta_hat.size()), alpha)));
  return out;
}

}  // namespace armle
