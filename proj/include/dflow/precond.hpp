#ifndef DFLOW_PRECOND_HPP
#define DFLOW_PRECOND_HPP

#include <memory>
#include <span>
#include <string>

#include "dflow/assembly.hpp"
#include "dflow/dense.hpp"
#include "dflow/inner_solver.hpp"
#include "dflow/sparse.hpp"

namespace dflow {

enum class PrecondKind { Simple, GeneralLU, AugSimple, AugIdentity, ExactAugLU };

/// Choices for H1 (Schur block) and H2 (velocity correction) in the general
/// inexact LU factorization.
enum class HKind { DiagK, DtMassInv, ExactK };

std::string to_string(PrecondKind kind);
/// Accepts the CLI names "simple", "aug-as", "aug-as-i", "exact-lu".
PrecondKind parse_precond_kind(std::string_view text);

struct InnerSpecs {
  InnerSolverSpec velocity;  ///< approximates K^{-1}
  InnerSolverSpec schur;     ///< approximates Sigma^{-1}
};

/// Prebuilt factors of one preconditioner. Immutable once built; apply() is
/// reentrant.
struct PreconditionerState {
  PrecondKind kind = PrecondKind::Simple;
  HKind h1 = HKind::DiagK;
  HKind h2 = HKind::DiagK;
  Index nu = 0, np = 0, m = 0;

  SparseMatrix K, B, Bt, Phi, Phit;  ///< copies of the system blocks
  SparseMatrix S;
  Vector d;      ///< diag(K)
  Vector dinv;   ///< D^{-1}
  Vector h1_diag;  ///< diagonal of H1 (equals dinv for SIMPLE)
  Vector h2_diag;  ///< diagonal of H2 when H2 is diagonal
  SparseMatrix sigma;     ///< B H1 B^T + S
  Vector w, winv;         ///< W = diag(Sigma)
  SparseMatrix sigma_lp;  ///< Phi D^{-1} B^T   (m x np)
  SparseMatrix sigma_pl;  ///< B D^{-1} Phi^T   (np x m)
  DenseMatrix sigma_l;    ///< Phi D^{-1} Phi^T
  DenseMatrix l33;        ///< Sigma_LP W^{-1} Sigma_PL - Sigma_L
  DenseLu l33_lu;

  std::shared_ptr<const InnerSolver> k_solver;
  std::shared_ptr<const InnerSolver> sigma_solver;

  // exact augmented LU only
  DenseLu schur_lu;        ///< B K^{-1} B^T + S
  DenseMatrix exact_y;     ///< Shat^{-1} B K^{-1} Phi^T   (np x m)
  DenseMatrix exact_l33;   ///< (Phi K^{-1} B^T) Y - Phi K^{-1} Phi^T

  Index size() const { return nu + np + m; }
};

PreconditionerState build_simple(const BlockSystem& sys, const InnerSpecs& inner = {});
PreconditionerState build_general_lu(const BlockSystem& sys, HKind h1, HKind h2,
                                     const InnerSpecs& inner = {});
PreconditionerState build_aug_simple(const BlockSystem& sys, const InnerSpecs& inner = {});
PreconditionerState build_aug_identity(const BlockSystem& sys, const InnerSpecs& inner = {});
/// Exact K and Schur solves; refuses systems larger than 5000 unknowns.
PreconditionerState build_exact_aug_lu(const BlockSystem& sys);

PreconditionerState build_preconditioner(PrecondKind kind, const BlockSystem& sys,
                                         const InnerSpecs& inner = {});

/// Simple and GeneralLU states pass the multiplier block through unchanged.
void apply_simple(const PreconditionerState& st, std::span<const double> r, std::span<double> z);
void apply_aug_simple(const PreconditionerState& st, std::span<const double> r, std::span<double> z);
void apply_aug_identity(const PreconditionerState& st, std::span<const double> r, std::span<double> z);
void apply_exact_aug_lu(const PreconditionerState& st, std::span<const double> r, std::span<double> z);
/// Dispatches on st.kind.
void apply_preconditioner(const PreconditionerState& st, std::span<const double> r, std::span<double> z);

/// Three-step SIMPLE-like solve of the 2x2 system with right-hand side (F, G).
MonolithicVector simple_like_solve(const PreconditionerState& st, std::span<const double> F,
                                   std::span<const double> G);
/// Five-step augmented SIMPLE-like solve with right-hand side (F, G, Q).
MonolithicVector aug_simple_like_solve(const PreconditionerState& st, std::span<const double> F,
                                       std::span<const double> G, std::span<const double> Q);

/// Stored lower and upper block factors as sparse matrices (desk sizes).
/// Dense blocks (L33) are stored with all their entries.
SparseMatrix lower_factor(const PreconditionerState& st);
SparseMatrix upper_factor(const PreconditionerState& st);

/// Closed form of the preconditioner matrix, built directly from the system
/// blocks rather than from the factors.
SparseMatrix explicit_preconditioner(const PreconditionerState& st);

/// A_aug - P for the state's variant.
SparseMatrix error_matrix(const PreconditionerState& st, const BlockSystem& sys);

}  // namespace dflow

#endif  // DFLOW_PRECOND_HPP
