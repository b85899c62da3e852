#pragma once

#include <stdexcept>
#include <string>

namespace sred {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent shapes, bad block layouts, malformed tensors.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Singular or ill-conditioned linear systems, non-finite probes.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A velocity that should lie in a constraint subspace does not.
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

/// A computed quantity escaped the subspace it is guaranteed to live in.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// Input documents that do not follow the documented grammar.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace sred
