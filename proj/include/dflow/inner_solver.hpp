#ifndef DFLOW_INNER_SOLVER_HPP
#define DFLOW_INNER_SOLVER_HPP

#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "dflow/sparse.hpp"

namespace dflow {

enum class InnerKind { DirectLU, ILU0, Jacobi, Chebyshev };

struct InnerSolverSpec {
  InnerKind kind = InnerKind::DirectLU;
  int sweeps = 1;               ///< Jacobi / Chebyshev only
  double damping = 2.0 / 3.0;   ///< Jacobi only
};

/// Parses "direct", "ilu0", "jacobi:k" or "chebyshev:k".
InnerSolverSpec parse_inner_solver(std::string_view text);
std::string to_string(const InnerSolverSpec& spec);

/// Approximate inverse of one matrix.
///
/// Every implementation here is a fixed linear operator: sweeps start from a
/// zero guess and run a fixed count, so the same input always yields the same
/// output and plain (non-flexible) GMRES stays valid around it.
class InnerSolver {
 public:
  virtual ~InnerSolver() = default;

  /// x = approx(A^{-1}) b
  virtual void apply(std::span<const double> b, std::span<double> x) const = 0;
  virtual InnerKind kind() const = 0;
  virtual bool is_fixed_linear() const { return true; }
  virtual Index size() const = 0;
};

std::shared_ptr<const InnerSolver> make_inner_solver(const SparseMatrix& a, const InnerSolverSpec& spec);

struct SpectrumBounds {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

/// Bounds for Jacobi-preconditioned Chebyshev: lambda_max of D^{-1}A from
/// `iterations` power steps (fixed seed), widened by 10%; lambda_min is
/// lambda_max / 30.
SpectrumBounds estimate_chebyshev_bounds(const SparseMatrix& a, int iterations = 10);

}  // namespace dflow

#endif  // DFLOW_INNER_SOLVER_HPP
