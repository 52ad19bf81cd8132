#pragma once

#include <stdexcept>
#include <string>

namespace dimdecomp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments: dimension mismatch, out-of-range parameters, unsupported rule sizes.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

/// Node-budget overflow or a non-finite integrand value.
class IntegrationFailure : public Error {
 public:
  using Error::Error;
};

/// A multiplicative factor fell below the singularity floor, or y_empty is zero
/// and conditioning was disabled.
class SingularFactor : public Error {
 public:
  using Error::Error;
};

/// A requested quantity is not available (e.g. truncation above the built order).
class Unavailable : public Error {
 public:
  using Error::Error;
};

}  // namespace dimdecomp
