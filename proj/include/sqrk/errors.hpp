#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sqrk {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad arguments: dimension mismatch, out-of-range index, invalid spec.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Numerical failures. The CLI maps these to exit code 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ZeroRowError : public InvalidArgument {
 public:
  explicit ZeroRowError(std::size_t row)
      : InvalidArgument("row " + std::to_string(row) + " has (near) zero norm"), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class NonConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EmptySampleError : public InvalidArgument {
 public:
  EmptySampleError() : InvalidArgument("quantile of an empty sample") {}
};

class QuantileIndexZeroError : public InvalidArgument {
 public:
  QuantileIndexZeroError(double q, std::size_t size)
      : InvalidArgument("floor(q * |S|) = 0 for q = " + std::to_string(q) +
                        ", |S| = " + std::to_string(size)) {}
};

class EmptyAcceptedSetError : public NumericalError {
 public:
  EmptyAcceptedSetError() : NumericalError("no residual passes the quantile threshold") {}
};

class NonUnitRowError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class QuantileConditionViolated : public InvalidArgument {
 public:
  QuantileConditionViolated() : InvalidArgument("alpha * (1 - q) must exceed beta") {}
};

class SamplingConditionViolated : public InvalidArgument {
 public:
  SamplingConditionViolated() : InvalidArgument("alpha * q must exceed beta") {}
};

/// Raised by the solver's optional runtime check of the quantile bound.
class QuantileBoundViolated : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace sqrk
