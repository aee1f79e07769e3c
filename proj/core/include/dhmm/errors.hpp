#pragma once

#include <stdexcept>
#include <string>

namespace dhmm {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed arguments: dimension mismatches, out-of-range indices,
// observation type not matching the emission family.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

// Floating-point trouble that cannot be recovered from: total forward
// mass underflowing to zero, non-finite training objective.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Kernel matrix is singular where an inverse is required.
class SingularKernelError : public Error {
 public:
  using Error::Error;
};

// Corpus or config file that does not parse; message names the offending
// line or record.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed file whose contents violate a model invariant; message
// names the failed constraint.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace dhmm
