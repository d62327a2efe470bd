#ifndef DFLOW_ASSEMBLY_HPP
#define DFLOW_ASSEMBLY_HPP

#include <span>
#include <vector>

#include "dflow/mesh.hpp"
#include "dflow/sparse.hpp"

namespace dflow {

// Unknown layout on the full (unreduced) spaces: velocity dof of vertex v and
// component c (0 = x, 1 = y) is 2*v + c; pressure dof of vertex v is v.
inline Index velocity_dof(Index vertex, int component) { return 2 * vertex + component; }

/// Operators that depend only on the mesh and the viscosity.
struct NSBlocks {
  Index num_vertices = 0;
  double viscosity = 0.0;
  double stabilization_alpha = 0.05;
  SparseMatrix mass;       ///< M, velocity mass matrix
  SparseMatrix stiffness;  ///< A = nu (grad u, grad v)
  SparseMatrix divergence; ///< B, B[l,j] = -(xi_l, div psi_j)
  SparseMatrix pressure_stabilization;  ///< S, tau_K (grad p, grad q)
  SparseMatrix flux;          ///< Phi for the Lagrange-multiplier sections
  SparseMatrix profile_flux;  ///< flux rows of the Dirichlet-profile sections

  Index velocity_size() const { return 2 * num_vertices; }
  Index pressure_size() const { return num_vertices; }
  Index num_sections() const { return flux.rows(); }
};

/// Assembles M, A, B, S (and both flux matrices) with exact quadrature on
/// affine P1 elements. The pressure stabilization uses tau_K = alpha h_K^2 / nu
/// with h_K the longest edge of the triangle.
NSBlocks assemble_constant_blocks(const Mesh& mesh, double viscosity, double alpha = 0.05);

/// C(U)[k,j] = (U . grad psi_j, psi_k), exact for P1 advecting fields.
SparseMatrix assemble_convection(const Mesh& mesh, std::span<const double> u_prev);

/// [Phi]_{ij} = int_{Gamma_i} psi_j . n for the first m flow sections.
SparseMatrix assemble_flux_matrix(const Mesh& mesh, int m);

/// Flux rows for every edge set with the given tags, in order.
SparseMatrix assemble_tag_flux(const Mesh& mesh, std::span<const BoundaryTag> tags);

/// Prescribed velocity values on eliminated unknowns. Dofs sorted, unique.
struct DirichletData {
  std::vector<Index> dofs;
  Vector values;
};

enum class ProfileShape { Parabolic, Flat };

/// No-slip data on every vertex touching a wall edge.
DirichletData wall_dirichlet(const Mesh& mesh);

/// Normal-velocity profile on a straight section, scaled so that its
/// discrete flux equals `flow_rate` (outward positive). Vertices shared with
/// walls carry zero.
DirichletData dirichlet_profile(const Mesh& mesh, BoundaryTag section, double flow_rate,
                                ProfileShape shape);

/// Unnormalized-by-mesh profile value: the continuous profile with flux
/// `flow_rate` over a segment of length `span`, evaluated at arc position s.
double profile_value(ProfileShape shape, double s, double span, double flow_rate);

/// Union of several Dirichlet sets; the first set listing a dof wins.
DirichletData merge_dirichlet(std::span<const DirichletData> parts);

enum class TimeMode { Unsteady, SteadyStokes };

/// Per-step inputs to the monolithic system.
struct StepData {
  TimeMode mode = TimeMode::Unsteady;
  double dt = 0.0;
  bool convection = true;
  std::span<const double> u_prev;  ///< full velocity at t^n (may be empty = zero)
  Point body_force{};              ///< constant f
  Vector flow_rates;               ///< Q_i(t^{n+1}), one per flux row
  DirichletData dirichlet;
  const SparseMatrix* extra_operator = nullptr;  ///< G on the full velocity space
};

/// Reduced augmented system
///
///   [  K  B^T Phi^T ] [U]   [F]
///   [ -B   S   0    ] [P] = [G]
///   [ Phi  0   0    ] [L]   [Q]
///
/// on the free velocity unknowns (Dirichlet dofs eliminated with lifting).
struct BlockSystem {
  SparseMatrix K, B, Bt, S, Phi, Phit;
  SparseMatrix M;  ///< reduced mass matrix (for the Chorin-Temam/Yosida factors)
  double dt = 0.0; ///< zero in steady mode
  Vector F, G, Q;

  std::vector<Index> free_dofs;  ///< reduced velocity index -> full dof
  DirichletData dirichlet;
  Index full_velocity_size = 0;

  Index nu() const { return K.rows(); }
  Index np() const { return S.rows(); }
  Index m() const { return Phi.rows(); }
  Index size() const { return nu() + np() + m(); }

  /// y = A_aug x
  void apply(std::span<const double> x, std::span<double> y) const;
  Vector rhs() const;
  SparseMatrix assembled() const;
  /// Expands reduced velocity to the full space, inserting Dirichlet values.
  Vector full_velocity(std::span<const double> u_free) const;
};

/// Builds K = M/dt + A + C(U^n) (+ G), F = (f, psi) + M U^n / dt and the
/// reduced block system. Steady mode drops the mass and convection terms.
BlockSystem build_time_step_system(const Mesh& mesh, const NSBlocks& blocks, const StepData& step);

/// Assembles a BlockSystem directly from reduced blocks (no elimination).
BlockSystem make_block_system(SparseMatrix K, SparseMatrix B, SparseMatrix S, SparseMatrix Phi,
                              Vector F, Vector G, Vector Q, SparseMatrix M = {}, double dt = 0.0);

}  // namespace dflow

#endif  // DFLOW_ASSEMBLY_HPP
