#pragma once

#include <stdexcept>
#include <string>

namespace wke {

/// Invalid grid, scenario or run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Base for failures raised while integrating in time.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Newton iteration did not reach its tolerance, or hit a singular system.
class NonConvergence : public SolverError {
 public:
  using SolverError::SolverError;
};

/// The step controller kept rejecting steps at the minimum step size.
class AbortedAtMinStep : public SolverError {
 public:
  using SolverError::SolverError;
};

class InsufficientSamples : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonPositiveValue : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wke
