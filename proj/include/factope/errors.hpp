#pragma once

#include <stdexcept>
#include <string>

namespace factope {

/// Malformed argument, unknown identifier, or out-of-range request.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A sweep asks for more replicate data than its master datasets hold.
class SizingError : public InputError {
 public:
  using InputError::InputError;
};

/// A behaviour policy assigns zero probability where the evaluation policy (or observed data) does not.
class CoverageError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A weighted estimator's denominator, or an ESS variance, is exactly zero.
class DegenerateWeightsError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An exact enumeration would exceed its atom budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace factope
