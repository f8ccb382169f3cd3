#pragma once

#include <stdexcept>
#include <string>

namespace kric {

/// Invalid user input: malformed measure, inconsistent dimensions, bad config.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative procedure stopped before reaching its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Picard iteration measured a contraction ratio >= 1.
class NonContractionError : public ConvergenceError {
 public:
  NonContractionError(const std::string& what, double suggested_lambda)
      : ConvergenceError(what), suggested_lambda_(suggested_lambda) {}
  double suggested_lambda() const { return suggested_lambda_; }

 private:
  double suggested_lambda_;
};

/// The effective control cost Nhat fell below its eigenvalue floor.
class FeedbackFloorError : public std::runtime_error {
 public:
  FeedbackFloorError(const std::string& what, double time, double min_eigenvalue)
      : std::runtime_error(what), time_(time), min_eigenvalue_(min_eigenvalue) {}
  double time() const { return time_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double time_;
  double min_eigenvalue_;
};

/// A provable property of the solution failed its numerical check.
class PropertyViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values encountered in coefficients or states.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kric
