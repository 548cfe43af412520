#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "armle/error.hpp"

namespace armle {

enum class KernelFamily { White, Ar1Corr, Fgn };

/// Unit-variance covariance function r(.) of a stationary centered Gaussian
/// noise. `param` is the AR(1) correlation `a` for Ar1Corr and the Hurst
/// index `H` for Fgn; it is ignored for White.
class CovarianceKernel {
 public:
  CovarianceKernel() = default;

  static CovarianceKernel white() { return CovarianceKernel(KernelFamily::White, 0.0); }

  static CovarianceKernel ar1(double a) {
    if (!(std::abs(a) < 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "ar1 kernel needs |a| < 1");
    }
    return CovarianceKernel(KernelFamily::Ar1Corr, a);
  }

  static CovarianceKernel fgn(double hurst) {
    if (!(hurst > 0.0 && hurst < 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "fgn kernel needs 0 < H < 1");
    }
    return CovarianceKernel(KernelFamily::Fgn, hurst);
  }

  KernelFamily family() const noexcept { return family_; }
  double param() const noexcept { return param_; }

  /// r(lag), with r(0) = 1.
  template <typename Scalar = double>
  Scalar operator()(std::int64_t lag) const {
    using std::abs;
    using std::pow;
    if (lag < 0) lag = -lag;
    switch (family_) {
      case KernelFamily::White:
        return lag == 0 ? Scalar(1) : Scalar(0);
      case KernelFamily::Ar1Corr:
        return pow(Scalar(param_), static_cast<int>(lag));
      case KernelFamily::Fgn: {
        if (lag == 0) return Scalar(1);
        const Scalar two_h = Scalar(2) * Scalar(param_);
        const Scalar k = Scalar(lag);
        return Scalar(0.5) * (pow(k + 1, two_h) - 2 * pow(k, two_h) +
                              pow(abs(k - 1), two_h));
      }
    }
    return Scalar(0);
  }

  std::string name() const {
    switch (family_) {
      case KernelFamily::White:
        return "white";
      case KernelFamily::Ar1Corr:
        return "ar1";
      case KernelFamily::Fgn:
        return "fgn";
    }
    return "unknown";
  }

  friend bool operator==(const CovarianceKernel&, const CovarianceKernel&) = default;

 private:
  CovarianceKernel(KernelFamily family, double param) : family_(family), param_(param) {}

  KernelFamily family_ = KernelFamily::White;
  double param_ = 0.0;
};

template <typename Scalar = double>
Scalar covariance(const CovarianceKernel& kernel, std::int64_t lag) {
  return kernel.template operator()<Scalar>(lag);
}

}  // namespace armle
