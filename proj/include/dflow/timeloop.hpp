#ifndef DFLOW_TIMELOOP_HPP
#define DFLOW_TIMELOOP_HPP

#include <span>
#include <string>
#include <vector>

#include "dflow/assembly.hpp"
#include "dflow/config.hpp"
#include "dflow/krylov.hpp"
#include "dflow/mesh.hpp"

namespace dflow {

/// A flow-rate section bound to its waveform. `sign` converts the
/// configured waveform to the outward flux used by Phi.
struct SectionBinding {
  BoundaryTag tag;
  Waveform waveform;
  double sign = 1.0;
  ProfileShape profile = ProfileShape::Parabolic;

  double outward_flow_rate(double t) const { return sign * waveform.value(t); }
};

/// Mesh, constant operators and boundary bookkeeping of one configuration.
struct Problem {
  ExperimentConfig config;
  Mesh mesh;
  NSBlocks blocks;
  std::vector<SectionBinding> flux_sections;     ///< Lagrange-multiplier rows, in Phi order
  std::vector<SectionBinding> profile_sections;  ///< Dirichlet-profile sections

  Vector flow_rates(double t) const;
  DirichletData dirichlet(double t) const;
};

Problem make_problem(const ExperimentConfig& config);

/// Reduced system of the step that ends at time t.
BlockSystem assemble_step(const Problem& problem, std::span<const double> u_prev, double t);

struct SolveOutcome {
  KrylovResult result;
  double flow_residual_max = 0.0;  ///< max_i |(Phi U)_i - Q_i|
};

/// Builds the configured preconditioner for `sys` and runs (F)GMRES.
SolveOutcome solve_system(const BlockSystem& sys, const ExperimentConfig& config,
                          std::span<const double> x0 = {});

struct StepRecord {
  int step = 0;
  double time = 0.0;
  int iterations = 0;
  bool converged = false;
  double true_residual = 0.0;  ///< ||b - A x|| / ||b||
  double rhs_norm = 0.0;
  double flow_residual_max = 0.0;
  double wall_seconds = 0.0;
};

struct Snapshot {
  int step = 0;
  double time = 0.0;
  Vector velocity;  ///< full space, 2 entries per vertex
  Vector pressure;
};

struct RunRecord {
  std::string variant;
  std::vector<StepRecord> steps;
  std::vector<Snapshot> snapshots;
  Vector velocity;  ///< final state
  Vector pressure;
  Vector multipliers;

  double mean_iterations() const;
  int max_iterations() const;
  double wall_seconds() const;
  bool all_converged() const;
};

/// BDF1 semi-implicit stepping from rest. A step that fails to converge is
/// recorded; with config.fail_fast it throws ConvergenceError instead.
RunRecord run_timeloop(const ExperimentConfig& config);
RunRecord run_timeloop(const Problem& problem);

}  // namespace dflow

#endif  // DFLOW_TIMELOOP_HPP
