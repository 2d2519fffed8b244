#pragma once

#include <stdexcept>
#include <string>

namespace katolab {

// Malformed or inconsistent input. The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything below is a numerical failure (exit code 1).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyDomainError : NumericalError {
  using NumericalError::NumericalError;
};

struct ResolutionError : NumericalError {
  using NumericalError::NumericalError;
};

struct PreconditionError : NumericalError {
  using NumericalError::NumericalError;
};

struct ConvergenceError : NumericalError {
  using NumericalError::NumericalError;
};

struct InsufficientDataError : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace katolab
