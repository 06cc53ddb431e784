#pragma once

#include <stdexcept>
#include <string>

namespace osr {

// Base class for recoverable failures raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failures (exit code 3 in the CLI).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class NotPositiveDefinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateSample : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NotPsd : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Bad inputs or malformed data (exit code 2 in the CLI).
class DataError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public DataError {
 public:
  using DataError::DataError;
};

class DomainError : public DataError {
 public:
  using DataError::DataError;
};

class EmptyInput : public DataError {
 public:
  using DataError::DataError;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class MissingLabelColumn : public DataError {
 public:
  using DataError::DataError;
};

class ClassMissing : public DataError {
 public:
  using DataError::DataError;
};

// A theorem-level invariant was violated (broken linear algebra, not bad input).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace osr
