#ifndef DFLOW_KRYLOV_HPP
#define DFLOW_KRYLOV_HPP

#include <functional>
#include <span>

#include "dflow/vector.hpp"

namespace dflow {

/// y = Op(x). Used for both the system matrix and the preconditioner.
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

struct KrylovParams {
  double rel_tol = 1e-8;
  double abs_tol = 1e-50;
  int restart = 200;
  int max_iters = 2000;
  bool flexible = false;  ///< store preconditioned basis vectors (FGMRES)

  void validate() const;
};

struct KrylovStats {
  int iterations = 0;
  int restarts = 0;
  bool converged = false;
  /// Entry 0 is ||b - A x0||; entry k is the minimized residual norm after
  /// iteration k (equal to the true residual in exact arithmetic).
  Vector residual_history;
  double rhs_norm = 0.0;
  double true_residual = 0.0;  ///< ||b - A x|| of the returned x
  double wall_seconds = 0.0;

  double relative_residual() const { return rhs_norm > 0.0 ? true_residual / rhs_norm : true_residual; }
};

struct KrylovResult {
  Vector x;
  KrylovStats stats;
};

/// Right-preconditioned restarted GMRES. Stops when ||b - A x|| <=
/// rel_tol ||b|| + abs_tol, checked on the explicitly recomputed residual.
/// `precond` may be empty (identity). `x0` may be empty (zero guess).
/// Reaching max_iters returns with converged = false; a NaN residual throws
/// BreakdownError.
KrylovResult gmres(const LinearOperator& op, const LinearOperator& precond, std::span<const double> b,
                   std::span<const double> x0, const KrylovParams& params);

/// Flexible variant: the preconditioner may change between iterations.
KrylovResult fgmres(const LinearOperator& op, const LinearOperator& precond, std::span<const double> b,
                    std::span<const double> x0, const KrylovParams& params);

}  // namespace dflow

#endif  // DFLOW_KRYLOV_HPP
