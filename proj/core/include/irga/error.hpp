#pragma once

#include <stdexcept>
#include <string>

namespace irga {

// Base for every error raised by the library. Callers that only care about
// "did it work" can catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad input values (non-positive level under a growth transform, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

// Data could not be aligned into a usable panel.
class IngestionError : public Error {
public:
  using Error::Error;
};

// Configuration or argument problems detected before any computation.
class ValidationError : public Error {
public:
  using Error::Error;
};

// Numerical failure during estimation (rank deficiency, Cholesky failure).
class ComputeError : public Error {
public:
  using Error::Error;
};

class FetchError : public Error {
public:
  using Error::Error;
};

} // namespace irga
