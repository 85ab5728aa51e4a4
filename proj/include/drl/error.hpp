#pragma once

#include <stdexcept>
#include <string>

namespace drl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not compose.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Unknown names, out-of-range hyperparameters, malformed config files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Two networks (or a network and an environment) disagree on layout.
class ArchitectureError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint corruption, truncation or version mismatch.
class ChecksumError : public Error {
 public:
  using Error::Error;
};

/// Replay index that does not address a complete stacked state.
class ValidityError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced by an arithmetic routine.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace drl
