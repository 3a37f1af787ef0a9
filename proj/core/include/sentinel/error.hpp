#pragma once

#include <stdexcept>
#include <string>

namespace sentinel {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix or port dimensions do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not deliver a trustworthy result
/// (non-convergence, singular pencil, residual above tolerance).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// An algebraic loop could not be eliminated.
class IllPosedError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input file / configuration.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace sentinel
