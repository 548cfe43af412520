#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace armle {

/// Failure categories. The CLI maps these onto exit codes.
enum class ErrorKind {
  InvalidArgument,
  Parse,
  Io,
  NotPositiveDefinite,
  Degenerate,
  Unstable,
  RootSolverNoConverge,
  TooShort,
  DimensionMismatch,
  SingularGram,
  NonFinite,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures caused by the numbers rather than by the input format.
  bool is_numeric() const noexcept {
    switch (kind_) {
      case ErrorKind::NotPositiveDefinite:
      case ErrorKind::Degenerate:
      case ErrorKind::Unstable:
      case ErrorKind::RootSolverNoConverge:
      case ErrorKind::SingularGram:
      case ErrorKind::NonFinite:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorKind kind_;
};

/// Step at which the innovation variance of a covariance sequence collapsed.
class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(std::size_t step)
      : Error(ErrorKind::NotPositiveDefinite,
              "covariance is not positive definite at step " +
                  std::to_string(step)),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class Degenerate : public Error {
 public:
  explicit Degenerate(std::size_t step)
      : Error(ErrorKind::Degenerate,
              "Durbin-Levinson recursion degenerate at step " +
                  std::to_string(step) + " (1 - beta^2 below threshold)"),
        step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

class SingularGram : public Error {
 public:
  SingularGram(const std::string& what, double condition)
      : Error(ErrorKind::SingularGram, what), condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

}  // namespace armle
