#ifndef DFLOW_ERRORS_HPP
#define DFLOW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dflow {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand sizes do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An index (row, section, dof) lies outside its valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Invalid user or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Degenerate geometry met during finite element assembly.
class AssemblyError : public Error {
 public:
  using Error::Error;
};

/// A diagonal entry is too small to be inverted.
class SingularDiagonalError : public Error {
 public:
  SingularDiagonalError(long row, double value)
      : Error("singular diagonal at row " + std::to_string(row) + " (value " +
              std::to_string(value) + ")"),
        row_(row) {}
  long row() const { return row_; }

 private:
  long row_;
};

/// Pivot breakdown in a dense or sparse factorization.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// The multiplier block L33 cannot be factorized; usually the flow-rate
/// sections produce linearly dependent rows of the flux matrix.
class SingularL33Error : public SingularMatrixError {
 public:
  using SingularMatrixError::SingularMatrixError;
};

/// Krylov breakdown (NaN or Inf in the residual).
class BreakdownError : public Error {
 public:
  using Error::Error;
};

/// A time step did not converge and the run was asked to stop.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// File system failure; the message carries the offending path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dflow

#endif  // DFLOW_ERRORS_HPP
