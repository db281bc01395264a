#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ensmetric {

/// Precondition violated by caller-supplied arguments (shapes, ranges, labels).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent data on disk or in descriptor matrices.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rank deficiency, indefinite kernels and other linear-algebra failures.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad run configuration (unknown option values, inconsistent settings).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver stopped before reaching its tolerance.
/// Carries the trace of the monitored quantity (residuals or violations).
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}

  const std::vector<double>& trace() const noexcept { return trace_; }

 private:
  std::vector<double> trace_;
};

}  // namespace ensmetric
