#pragma once

#include <stdexcept>
#include <string>

namespace cfgtune {

// Base for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed space/model/front document.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A configuration or argument that violates a precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// No configuration satisfies the active constraints.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class OracleError : public Error {
 public:
  using Error::Error;
};

class OracleProcessError : public OracleError {
 public:
  using OracleError::OracleError;
};

class OracleResponseError : public OracleError {
 public:
  using OracleError::OracleError;
};

class OracleTimeoutError : public OracleError {
 public:
  using OracleError::OracleError;
};

}  // namespace cfgtune
