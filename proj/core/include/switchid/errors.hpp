#pragma once

#include <stdexcept>
#include <string>

namespace switchid {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: bad dimensions, out-of-range parameters, parse failures.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The candidate family violates a separation, instability-margin or
// observability requirement.
class AssumptionError : public Error {
 public:
  using Error::Error;
};

// A routine that needs rho(A) < 1 received an unstable matrix.
class UnstableError : public Error {
 public:
  using Error::Error;
};

// Ill-conditioned or non-convergent numerics (singular Gram matrix, etc.).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace switchid
