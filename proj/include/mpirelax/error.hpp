#pragma once

#include <stdexcept>
#include <string>

namespace mpirelax {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of an operation (negative x, h <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent or malformed configuration: mismatched grids, bad manifest keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A solver broke down or a problem is too badly conditioned to be solved.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mpirelax
