#pragma once

#include <stdexcept>
#include <string>

namespace probmax {

/// Raised when an input violates a documented precondition (bad dimension,
/// parameter out of range, malformed config). The CLI maps it to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public ValidationError {
 public:
  DimensionError(const std::string& what, long expected, long actual)
      : ValidationError(what + ": expected dimension " + std::to_string(expected) + ", got " +
                        std::to_string(actual)) {}
};

/// Numerical or runtime failure (infeasible set, sampler breakdown, I/O).
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

}  // namespace probmax
