#pragma once

#include <stdexcept>
#include <string>

namespace magicbench {

// Base of every error raised by the library. Subclasses name the failure
// category so callers (the sweep driver in particular) can record it.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Operand sizes disagree (qubit counts, vector lengths, tensor shapes).
class SizeError : public Error {
  public:
    using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractError : public Error {
  public:
    using Error::Error;
};

class InvalidModelError : public Error {
  public:
    using Error::Error;
};

// The request exceeds what a routine is built to handle (e.g. dense paths
// above their qubit limit).
class CapabilityError : public Error {
  public:
    using Error::Error;
};

// Loss of numerical consistency: non-finite values, failed solves,
// moments outside their admissible range.
class NumericalError : public Error {
  public:
    using Error::Error;
};

class ConfigError : public Error {
  public:
    using Error::Error;
};

class IoError : public Error {
  public:
    using Error::Error;
};

} // namespace magicbench
