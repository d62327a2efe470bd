#include "dflow/timeloop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "dflow/errors.hpp"
#include "dflow/precond.hpp"

namespace dflow {

Problem make_problem(const ExperimentConfig& config) {
  config.validate();
  Problem p;
  p.config = config;
  p.mesh = build_mesh(config);
  p.blocks = assemble_constant_blocks(p.mesh, config.viscosity, config.stabilization_alpha);

  auto section_of = [&](int port) -> const SectionConfig& {
    return port < 0 ? config.inlet : config.ports[static_cast<std::size_t>(port)].section;
  };
  // the inlet waveform counts inflow as positive, ports count outflow
  auto sign_of = [](int port) { return port < 0 ? -1.0 : 1.0; };

  const auto& flow_ports = p.mesh.flow_section_port();
  for (int i = 0; i < static_cast<int>(flow_ports.size()); ++i) {
    const auto& s = section_of(flow_ports[i]);
    p.flux_sections.push_back({{BoundaryKind::FlowSection, i}, s.waveform, sign_of(flow_ports[i]), s.profile});
  }
  const auto& profile_ports = p.mesh.profile_section_port();
  for (int i = 0; i < static_cast<int>(profile_ports.size()); ++i) {
    const auto& s = section_of(profile_ports[i]);
    p.profile_sections.push_back(
        {{BoundaryKind::ProfileSection, i}, s.waveform, sign_of(profile_ports[i]), s.profile});
  }
  return p;
}

Vector Problem::flow_rates(double t) const {
  Vector q;
  q.reserve(flux_sections.size());
  for (const auto& s : flux_sections) q.push_back(s.outward_flow_rate(t));
  return q;
}

DirichletData Problem::dirichlet(double t) const {
  std::vector<DirichletData> parts{wall_dirichlet(mesh)};
  for (const auto& s : profile_sections) {
    parts.push_back(dirichlet_profile(mesh, s.tag, s.outward_flow_rate(t), s.profile));
  }
  return merge_dirichlet(parts);
}

BlockSystem assemble_step(const Problem& problem, std::span<const double> u_prev, double t) {
  const auto& c = problem.config;
  StepData step;
  step.mode = c.time_mode;
  step.dt = c.dt;
  step.convection = c.convection;
  step.u_prev = u_prev;
  step.flow_rates = problem.flow_rates(t);
  step.dirichlet = problem.dirichlet(t);
  return build_time_step_system(problem.mesh, problem.blocks, step);
}

SolveOutcome solve_system(const BlockSystem& sys, const ExperimentConfig& config, std::span<const double> x0) {
  const PreconditionerState state = build_preconditioner(config.precond, sys, config.inner);
  const LinearOperator op = [&sys](std::span<const double> x, std::span<double> y) { sys.apply(x, y); };
  const LinearOperator prec = [&state](std::span<const double> r, std::span<double> z) {
    apply_preconditioner(state, r, z);
  };
  const Vector b = sys.rhs();
  SolveOutcome out;
  out.result = config.krylov.flexible ? fgmres(op, prec, b, x0, config.krylov) : gmres(op, prec, b, x0, config.krylov);

  const auto u = std::span<const double>(out.result.x).subspan(0, static_cast<std::size_t>(sys.nu()));
  const Vector flux = spmv(sys.Phi, u);
  for (std::size_t i = 0; i < flux.size(); ++i) {
    out.flow_residual_max = std::max(out.flow_residual_max, std::abs(flux[i] - sys.Q[i]));
  }
  return out;
}

double RunRecord::mean_iterations() const {
  if (steps.empty()) return 0.0;
  const double total = std::accumulate(steps.begin(), steps.end(), 0.0,
                                       [](double acc, const StepRecord& s) { return acc + s.iterations; });
  return total / static_cast<double>(steps.size());
}

int RunRecord::max_iterations() const {
  int m = 0;
  for (const auto& s : steps) m = std::max(m, s.iterations);
  return m;
}

double RunRecord::wall_seconds() const {
  double w = 0.0;
  for (const auto& s : steps) w += s.wall_seconds;
  return w;
}

bool RunRecord::all_converged() const {
  return std::all_of(steps.begin(), steps.end(), [](const StepRecord& s) { return s.converged; });
}

RunRecord run_timeloop(const ExperimentConfig& config) { return run_timeloop(make_problem(config)); }

RunRecord run_timeloop(const Problem& problem) {
  const auto& c = problem.config;
  RunRecord record;
  record.variant = to_string(c.precond);

  Vector u(static_cast<std::size_t>(problem.blocks.velocity_size()), 0.0);
  Vector x_prev;
  const int n = c.num_steps();
  for (int s = 1; s <= n; ++s) {
    const auto start = std::chrono::steady_clock::now();
    const double t = c.time_mode == TimeMode::SteadyStokes ? c.end_time : s * c.dt;
    const BlockSystem sys = assemble_step(problem, u, t);
    const bool warm = c.warm_start && static_cast<Index>(x_prev.size()) == sys.size();
    SolveOutcome out = solve_system(sys, c, warm ? std::span<const double>(x_prev) : std::span<const double>());
    const KrylovStats& stats = out.result.stats;

    StepRecord step;
    step.step = s;
    step.time = t;
    step.iterations = stats.iterations;
    step.converged = stats.converged;
    step.true_residual = stats.relative_residual();
    step.rhs_norm = stats.rhs_norm;
    step.flow_residual_max = out.flow_residual_max;

    const MonolithicVector x(sys.nu(), sys.np(), sys.m(), std::move(out.result.x));
    u = sys.full_velocity(x.u());
    step.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    record.steps.push_back(step);

    if (!step.converged && c.fail_fast) {
      throw ConvergenceError("step " + std::to_string(s) + " (t = " + std::to_string(t) + " s) did not converge in " +
                             std::to_string(step.iterations) + " iterations, relative residual " +
                             std::to_string(step.true_residual));
    }

    const auto p = x.p();
    if (c.snapshot_stride > 0 && s % c.snapshot_stride == 0) {
      record.snapshots.push_back({s, t, u, Vector(p.begin(), p.end())});
    }
    if (s == n) {
      record.velocity = u;
      record.pressure.assign(p.begin(), p.end());
      const auto l = x.lambda();
      record.multipliers.assign(l.begin(), l.end());
    }
    x_prev = x.data();
  }
  return record;
}

}  // namespace dflow
