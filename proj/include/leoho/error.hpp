#pragma once

#include <stdexcept>
#include <string>

namespace leoho {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration (bad shell, zero users, missing checkpoint).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Tensor or vector dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed per-call input, e.g. an action index pointing at a masked slot.
class InputError : public Error {
 public:
  using Error::Error;
};

// Non-finite loss or gradient during optimisation.
class TrainingError : public Error {
 public:
  using Error::Error;
};

// A decision was requested for a user with no visible satellite.
class NoCandidateError : public Error {
 public:
  using Error::Error;
};

// Instance exceeds the bounds of exhaustive enumeration.
class SizeError : public Error {
 public:
  using Error::Error;
};

}  // namespace leoho
