#pragma once

#include <stdexcept>
#include <string>

namespace tkrr {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter violates its contract (non-positive lengthscale, bad rank, shape mismatch, ...).
class InvalidParameterError : public Error {
 public:
  using Error::Error;
};

/// An input point lies outside the feature domain [-U, U]; callers must scale first.
class DomainViolationError : public Error {
 public:
  using Error::Error;
};

/// A dense materialization would exceed the configured capacity limit.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// A linear solve failed even after jitter escalation.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double attempted_jitter)
      : Error(what), attempted_jitter_(attempted_jitter) {}
  explicit NumericalError(const std::string& what) : Error(what) {}

  double attempted_jitter() const { return attempted_jitter_; }

 private:
  double attempted_jitter_ = 0.0;
};

/// Dataset I/O or parse failure; carries the 1-based line number when known.
class DataError : public Error {
 public:
  DataError(const std::string& what, long line) : Error(what), line_(line) {}
  explicit DataError(const std::string& what) : Error(what) {}

  long line() const { return line_; }

 private:
  long line_ = -1;
};

/// Model file is structurally invalid: wrong schema version or inconsistent shapes.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace tkrr
