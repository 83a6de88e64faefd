#pragma once

#include <stdexcept>
#include <string>

namespace era {

/// Argument outside the domain of a schedule or formula.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Caller violated an interface contract (dimension mismatch, bad weights).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was invoked before its preconditions held.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Iterative numerics failed (root finding, singular coefficients).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Interpolation nodes do not define a unique polynomial.
class DegenerateInterpolationError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Invalid solver or experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace era
