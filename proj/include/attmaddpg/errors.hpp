// Error types shared by every module. All failures surface as exceptions
// derived from attmaddpg::Error so callers can catch one base.

#pragma once

#include <stdexcept>
#include <string>

namespace attmaddpg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid hyperparameters, unknown config fields, parameter/layout mismatch.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix dimensions that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN or infinite values where finite ones are required.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// API called out of order (backward before forward, step after done, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// An action outside the declared action space was passed to an environment.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Malformed topology, checkpoint or other structured input.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A checkpoint that does not fit the requested environment.
class CheckpointIncompatible : public Error {
 public:
  using Error::Error;
};

}  // namespace attmaddpg
