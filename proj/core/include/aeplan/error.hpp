#pragma once

#include <stdexcept>
#include <string>

namespace aeplan {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input or configuration. The CLI maps this to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Operand dimensions do not match the parameter set or each other.
class ShapeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Failure while running an otherwise valid computation. Exit code 2.
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity showed up where a finite value is required.
class NumericError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

/// Every candidate of a shooting planner violated the uncertainty cap.
class NoAdmissiblePlan : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class CheckpointError : public RuntimeFailure {
 public:
  enum class Kind { io, version, parse, truncated, dimension };

  CheckpointError(Kind kind, const std::string& what)
      : RuntimeFailure(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace aeplan
