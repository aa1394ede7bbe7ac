#pragma once

#include <stdexcept>
#include <string>

namespace dhmm {

/// Root of every exception raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input violates a documented precondition or type invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class OutOfSupportError : public Error {
 public:
  using Error::Error;
};

/// Power iteration did not settle, or the chain is reducible/periodic.
class NonErgodicError : public Error {
 public:
  using Error::Error;
};

/// A likelihood family has unbounded |log L| over its support.
class BoundednessError : public Error {
 public:
  using Error::Error;
};

/// Every hypothesis assigns zero likelihood to the received observations.
class ImpossibleObservationError : public Error {
 public:
  using Error::Error;
};

/// A grid computation was requested outside the dimensions it supports.
class TractabilityError : public Error {
 public:
  using Error::Error;
};

class GridLeakageError : public Error {
 public:
  using Error::Error;
};

}  // namespace dhmm
