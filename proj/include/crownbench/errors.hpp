#pragma once

#include <stdexcept>
#include <string>

namespace crownbench {

/// Input violates a documented precondition or invariant (bad geometry, CRS
/// mismatch, out-of-range threshold). Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Math precondition failure inside a pure function (zero-area IoU operand,
/// singular transform).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// File could not be read, written, or decoded. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace crownbench
