#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gopforge {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A NaN/Inf appeared where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// An argument violates a documented precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Internal contract broken by the caller, e.g. a stale forward cache.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Training diverged; carries the epoch at which the loss went non-finite.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::size_t epoch)
      : Error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

// A progressive step could not produce a usable layer.
class ProgressionError : public Error {
 public:
  using Error::Error;
};

// Malformed text input (CSV rows, configuration values).
class ParseError : public Error {
 public:
  using Error::Error;
};

// File could not be read or written, or its content is corrupt.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace gopforge
