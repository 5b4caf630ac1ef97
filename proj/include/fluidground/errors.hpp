#pragma once

#include <stdexcept>
#include <string>

namespace fg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration. CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor shape or width mismatch.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. backward on a tensor that is not on the tape.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Simulation or training produced non-finite or runaway values. CLI exit code 3.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or format failure. CLI exit code 4.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fg
