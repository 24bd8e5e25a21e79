#pragma once

#include <stdexcept>
#include <string>

namespace psipi {

/// Raised for violated preconditions and malformed inputs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a computation cannot produce a meaningful result
/// (e.g. an unobservable object in phase retrieval).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace psipi
