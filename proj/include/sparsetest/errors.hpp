#pragma once

#include <stdexcept>
#include <string>

namespace sparsetest {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A stated precondition was violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Requested a sampler from a model that has none (moment-only models).
class UnsupportedSampler : public Error {
 public:
  using Error::Error;
};

// Floating-point computation failed (overflow, non-convergent quadrature).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

class EmptyVector : public Error {
 public:
  using Error::Error;
};

// The cumulant needed by an estimator or tester is (numerically) zero.
class DegenerateCumulant : public Error {
 public:
  using Error::Error;
};

// No usable nonzero cumulant exists in the scanned range; the marginal
// behaves like a Gaussian and the testing problem is not solvable this way.
class GaussianObstruction : public Error {
 public:
  using Error::Error;
};

// An enumeration guard (combinatorial explosion) was exceeded.
class ResourceLimit : public Error {
 public:
  using Error::Error;
};

// Exact moments are unavailable past some order.
class TruncationError : public Error {
 public:
  using Error::Error;
};

// Configuration / CLI validation failure.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace sparsetest
