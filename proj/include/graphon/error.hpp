#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace graphon {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: out-of-range arguments, malformed matrices, bad JSON.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A solver precondition that depends on the data, e.g. the contraction
/// condition |alpha| * lambda_max < 1.
class PreconditionError : public DomainError {
 public:
  using DomainError::DomainError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Raised when an iterative method runs out of iterations. Carries the last
/// iterate and the per-iteration residuals so callers can inspect progress.
class IterationLimitError : public NumericalError {
 public:
  IterationLimitError(const std::string& what, Eigen::VectorXd last_iterate,
                      std::vector<double> residual_history)
      : NumericalError(what),
        last_iterate_(std::move(last_iterate)),
        residual_history_(std::move(residual_history)) {}

  const Eigen::VectorXd& last_iterate() const { return last_iterate_; }
  const std::vector<double>& residual_history() const {
    return residual_history_;
  }

 private:
  Eigen::VectorXd last_iterate_;
  std::vector<double> residual_history_;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw DomainError(message);
}

}  // namespace detail
}  // namespace graphon
