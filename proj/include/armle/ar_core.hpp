#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/LU>

#include "armle/error.hpp"

namespace armle {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Roots must sit strictly inside the circle of radius 1 - kStabilityMargin.
inline constexpr double kStabilityMargin = 1e-9;
inline constexpr int kRootIterationCap = 200;
inline constexpr double kRootTolerance = 1e-12;

/// p x p companion matrix: first row theta, ones on the subdiagonal.
template <typename Derived>
Matrix<typename Derived::Scalar> companion(const Eigen::MatrixBase<Derived>& theta) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index p = theta.size();
  if (p < 1) throw Error(ErrorKind::InvalidArgument, "AR order must be >= 1");
  Matrix<Scalar> a = Matrix<Scalar>::Zero(p, p);
  a.row(0) = theta.transpose();
  if (p > 1) a.diagonal(-1).setOnes();
  return a;
}

/// Roots of z^p - theta_1 z^{p-1} - ... - theta_p by Aberth-Ehrlich
/// simultaneous iteration. Exact zero roots (trailing zero coefficients) are
/// deflated first.
template <typename Derived>
std::vector<std::complex<typename Derived::Scalar>> characteristic_roots(
    const Eigen::MatrixBase<Derived>& theta) {
  using Scalar = typename Derived::Scalar;
  using Complex = std::complex<Scalar>;
  using std::abs;
  using std::cos;
  using std::sin;

  if (!theta.allFinite()) throw Error(ErrorKind::InvalidArgument, "theta must be finite");
  Eigen::Index degree = theta.size();
  std::vector<Complex> roots;
  while (degree > 0 && theta(degree - 1) == Scalar(0)) {
    roots.emplace_back(Scalar(0));
    --degree;
  }
  if (degree == 0) return roots;

  // coeff[j] multiplies z^{degree-j}.
  std::vector<Scalar> coeff(static_cast<std::size_t>(degree) + 1);
  coeff[0] = Scalar(1);
  for (Eigen::Index j = 1; j <= degree; ++j) coeff[static_cast<std::size_t>(j)] = -theta(j - 1);

  auto eval = [&](Complex z, Complex& value, Complex& deriv, Scalar& scale) {
    value = Complex(coeff[0]);
    deriv = Complex(0);
    scale = abs(coeff[0]);
    const Scalar rz = abs(z);
    for (std::size_t j = 1; j < coeff.size(); ++j) {
      deriv = deriv * z + value;
      value = value * z + coeff[j];
      scale = scale * rz + abs(coeff[j]);
    }
  };

  Scalar bound = Scalar(0);
  for (std::size_t j = 1; j < coeff.size(); ++j) bound = std::max(bound, abs(coeff[j]));
  const Scalar radius = Scalar(1) + bound;
  const auto d = static_cast<std::size_t>(degree);
  std::vector<Complex> z(d);
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  for (std::size_t k = 0; k < d; ++k) {
    const Scalar angle = two_pi * Scalar(k) / Scalar(d) + Scalar(0.4);
    z[k] = Complex(radius * cos(angle), radius * sin(angle)) * Scalar(0.5);
  }

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  bool converged = false;
  for (int iter = 0; iter < kRootIterationCap && !converged; ++iter) {
    converged = true;
    for (std::size_t k = 0; k < d; ++k) {
      Complex value;
      Complex deriv;
      Scalar scale;
      eval(z[k], value, deriv, scale);
      // Residual at rounding level: nothing left to resolve at this root.
      if (abs(value) <= Scalar(8) * Scalar(d) * eps * scale) continue;
      const Complex ratio = value / deriv;
      Complex repulsion(0);
      for (std::size_t j = 0; j < d; ++j) {
        if (j != k) repulsion += Scalar(1) / (z[k] - z[j]);
      }
      const Complex step = ratio / (Scalar(1) - ratio * repulsion);
      z[k] -= step;
      if (!(abs(step) < Scalar(kRootTolerance) * (Scalar(1) + abs(z[k])))) converged = false;
    }
  }
  if (!converged) {
    throw Error(ErrorKind::RootSolverNoConverge,
                "characteristic root iteration did not converge in " +
                    std::to_string(kRootIterationCap) + " iterations");
  }
  roots.insert(roots.end(), z.begin(), z.end());
  return roots;
}

template <typename Scalar>
struct StabilityReport {
  bool stable = false;
  /// Root moduli, largest first.
  std::vector<Scalar> root_moduli;
  Scalar spectral_radius() const { return root_moduli.empty() ? Scalar(0) : root_moduli.front(); }
};

template <typename Derived>
StabilityReport<typename Derived::Scalar> stability(const Eigen::MatrixBase<Derived>& theta) {
  using Scalar = typename Derived::Scalar;
  StabilityReport<Scalar> report;
  for (const auto& root : characteristic_roots(theta)) report.root_moduli.push_back(std::abs(root));
  std::sort(report.root_moduli.begin(), report.root_moduli.end(), std::greater<>());
  report.stable = report.spectral_radius() < Scalar(1) - Scalar(kStabilityMargin);
  return report;
}

template <typename Derived>
bool is_stable(const Eigen::MatrixBase<Derived>& theta) {
  return stability(theta).stable;
}

template <typename Derived>
void require_stable(const Eigen::MatrixBase<Derived>& theta) {
  if (!is_stable(theta)) {
    throw Error(ErrorKind::Unstable, "theta is outside the stationarity region");
  }
}

/// Solves X = A X A^T + Q by a dense Kronecker solve. Only meaningful when
/// rho(A) < 1.
template <typename DerivedA, typename DerivedQ>
Matrix<typename DerivedA::Scalar> discrete_lyapunov(const Eigen::MatrixBase<DerivedA>& a,
                                                    const Eigen::MatrixBase<DerivedQ>& q) {
  using Scalar = typename DerivedA::Scalar;
  const Eigen::Index p = a.rows();
  const Eigen::Index pp = p * p;
  // vec(A X A^T) = (A kron A) vec(X), column-major vec.
  Matrix<Scalar> system = Matrix<Scalar>::Identity(pp, pp);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      system.block(i * p, j * p, p, p) -= a(i, j) * a;
    }
  }
  const Matrix<Scalar> qm = q;
  const Vector<Scalar> rhs = Eigen::Map<const Vector<Scalar>>(qm.data(), pp);
  const Vector<Scalar> sol = system.partialPivLu().solve(rhs);
  Matrix<Scalar> x = Eigen::Map<const Matrix<Scalar>>(sol.data(), p, p);
  return (x + x.transpose()) / Scalar(2);
}

/// I(theta) solving I = A_0^T I A_0 + b b^T with b the first unit vector.
template <typename Derived>
Matrix<typename Derived::Scalar> fisher_info(const Eigen::MatrixBase<Derived>& theta) {
  using Scalar = typename Derived::Scalar;
  require_stable(theta);
  const Matrix<Scalar> a = companion(theta);
  Matrix<Scalar> bb = Matrix<Scalar>::Zero(a.rows(), a.rows());
  bb(0, 0) = Scalar(1);
  return discrete_lyapunov(a.transpose(), bb);
}

/// Stationary covariance Gamma = A_0 Gamma A_0^T + b b^T of the unit-variance
/// AR state (X_n, ..., X_{n-p+1}). This is the limit of <M>_n / n. It agrees
/// with fisher_info for p = 1.
template <typename Derived>
Matrix<typename Derived::Scalar> stationary_information(const Eigen::MatrixBase<Derived>& theta) {
  using Scalar = typename Derived::Scalar;
  require_stable(theta);
  const Matrix<Scalar> a = companion(theta);
  Matrix<Scalar> bb = Matrix<Scalar>::Zero(a.rows(), a.rows());
  bb(0, 0) = Scalar(1);
  return discrete_lyapunov(a, bb);
}

template <typename Derived>
Matrix<typename Derived::Scalar> spd_inverse(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::LLT<Matrix<Scalar>> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::Degenerate, "matrix is not positive definite");
  }
  Matrix<Scalar> inv = llt.solve(Matrix<Scalar>::Identity(m.rows(), m.cols()));
  return (inv + inv.transpose()) / Scalar(2);
}

template <typename Derived>
Matrix<typename Derived::Scalar> fisher_info_inverse(const Eigen::MatrixBase<Derived>& theta) {
  return spd_inverse(fisher_info(theta));
}

template <typename Derived>
Matrix<typename Derived::Scalar> stationary_information_inverse(
    const Eigen::MatrixBase<Derived>& theta) {
  return spd_inverse(stationary_information(theta));
}

}  // namespace armle
