#pragma once

#include <stdexcept>
#include <string>

namespace nlc2 {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration, mismatched dimensions, malformed input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a function (e.g. chi_M(s < 0)).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A requested length scale is below what the grid resolves.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

// Misuse of an API (e.g. empty series).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Structured I/O failure; carries the offending path in the message.
class IoError : public Error {
 public:
  using Error::Error;
};

// Base of failures that signal the numerical solution left its valid regime.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class BlowUpError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateDirectorError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class PositivityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class GridScaleConcentrationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A concentration window could not be resolved on the current grid.
class InconclusiveSegmentError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlc2
