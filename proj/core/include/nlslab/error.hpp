#pragma once

#include <stdexcept>
#include <string>

namespace nlslab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called outside its domain (bad grid, t >= T, mass too large, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver or bisection did not reach its target.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or an unrecoverable numerical breakdown.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed scenario configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlslab
