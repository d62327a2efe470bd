#include "dflow/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "dflow/errors.hpp"
#include "dflow/krylov.hpp"
#include "dflow/oracle.hpp"

namespace dflow {

namespace {

Check at_most(std::string name, double value, double limit, std::string detail = {}) {
  return {std::move(name), value <= limit, value, limit, std::move(detail)};
}

Check at_least(std::string name, double value, double limit, std::string detail = {}) {
  return {std::move(name), value >= limit, value, limit, std::move(detail)};
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

FieldAgreement compare_runs(std::string label, const RunRecord& a, const RunRecord& b) {
  return {std::move(label), relative_difference(a.velocity, b.velocity), relative_difference(a.pressure, b.pressure)};
}

void add_agreement_checks(std::vector<Check>& checks, const FieldAgreement& f, double rel_tol) {
  const double limit = limits::kFieldAgreementFactor * rel_tol;
  checks.push_back(at_most("field_agreement.velocity[" + f.label + "]", f.velocity, limit));
  checks.push_back(at_most("field_agreement.pressure[" + f.label + "]", f.pressure, limit));
}

// Nodal interpolant of the parabolic channel profile carrying flow rate q.
Vector parabolic_field(const Mesh& mesh, double height, double q) {
  Vector u(static_cast<std::size_t>(2 * mesh.num_vertices()), 0.0);
  for (Index v = 0; v < mesh.num_vertices(); ++v) {
    const double y = std::clamp(mesh.vertices()[v].y, 0.0, height);
    u[velocity_dof(v, 0)] = 6.0 * q / (height * height * height) * y * (height - y);
  }
  return u;
}

double max_abs_block(const SparseMatrix& a, Index r0, Index c0, Index nr, Index nc) {
  return extract_block(a, r0, c0, nr, nc).max_abs();
}

}  // namespace

bool all_passed(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

double relative_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("relative_difference: length mismatch");
  Vector d(a.begin(), a.end());
  axpy(-1.0, b, d);
  const double nb = norm2(b);
  return nb > 0.0 ? norm2(d) / nb : norm2(d);
}

double worst_flow_residual_ratio(const RunRecord& record, double rel_tol) {
  double worst = 0.0;
  for (const auto& s : record.steps) {
    const double scale = rel_tol * s.rhs_norm;
    if (scale > 0.0) {
      worst = std::max(worst, s.flow_residual_max / scale);
    } else if (s.flow_residual_max > 0.0) {
      worst = std::max(worst, std::numeric_limits<double>::infinity());
    }
  }
  return worst;
}

double relative_max_difference(const SparseMatrix& a, const SparseMatrix& b) {
  const double diff = add(1.0, a, -1.0, b).max_abs();
  const double scale = std::max(a.max_abs(), b.max_abs());
  return scale > 0.0 ? diff / scale : diff;
}

void perturb_l33(PreconditionerState& state, double eps) {
  if (state.kind != PrecondKind::AugSimple) throw ConfigError("perturb_l33 needs an aug-as preconditioner");
  if (state.m == 0 || eps == 0.0) return;
  for (Index i = 0; i < state.m; ++i) {
    for (Index j = 0; j < state.m; ++j) state.l33(i, j) *= 1.0 + eps;
  }
  state.l33_lu = DenseLu(state.l33);
}

double MScalingResult::mean_iterations(int m, PrecondKind variant) const {
  for (const auto& r : rows) {
    if (r.m == m && r.variant == variant) return r.mean_iterations;
  }
  throw IndexError("m-scaling: no row for m = " + std::to_string(m) + ", " + to_string(variant));
}

MScalingResult run_m_scaling(const ExperimentConfig& config) {
  if (config.mesh != MeshKind::Manifold) throw ConfigError("m-scaling needs a manifold mesh");
  const int k = static_cast<int>(config.ports.size());
  MScalingResult out;

  for (int m = 1; m <= k + 1; ++m) {
    ExperimentConfig c = config;
    for (int p = 0; p < k; ++p) {
      c.ports[p].section.mode = p < m - 1 ? SectionMode::LagrangeMultiplier : SectionMode::DirichletProfile;
    }
    Problem problem = make_problem(c);
    std::vector<RunRecord> records;
    for (const PrecondKind variant : config.variants) {
      problem.config.precond = variant;
      RunRecord rec = run_timeloop(problem);
      out.rows.push_back({m, variant, rec.mean_iterations(), rec.max_iterations(), rec.wall_seconds(),
                          rec.all_converged(), worst_flow_residual_ratio(rec, c.krylov.rel_tol)});
      records.push_back(rec);
      out.runs.emplace_back(m, std::move(rec));
    }
    for (std::size_t v = 1; v < records.size(); ++v) {
      out.agreement.push_back(compare_runs("m=" + std::to_string(m) + " " + to_string(config.variants[0]) + " vs " +
                                               to_string(config.variants[v]),
                                           records[0], records[v]));
    }
  }

  auto& checks = out.checks;
  for (const auto& r : out.rows) {
    const std::string tag = "[m=" + std::to_string(r.m) + " " + to_string(r.variant) + "]";
    checks.push_back({"converged" + tag, r.all_converged, r.all_converged ? 1.0 : 0.0, 1.0, ""});
    checks.push_back(at_most("flow_residual" + tag, r.flow_residual_ratio, limits::kFlowResidualFactor,
                             "max |Phi U - Q| / (rel_tol ||b||)"));
  }
  for (const auto& f : out.agreement) add_agreement_checks(checks, f, config.krylov.rel_tol);

  const auto has = [&](PrecondKind v) {
    return std::find(config.variants.begin(), config.variants.end(), v) != config.variants.end();
  };
  if (has(PrecondKind::AugSimple)) {
    double lo = 1e300, hi = -1e300;
    for (int m = 1; m <= k + 1; ++m) {
      const double v = out.mean_iterations(m, PrecondKind::AugSimple);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double base = out.mean_iterations(1, PrecondKind::AugSimple);
    checks.push_back(at_most("aug-as_spread", (hi - lo) / base, limits::kMScalingMaxSpread,
                             "(max - min) / mean at m = 1"));
  }
  if (has(PrecondKind::AugIdentity) && k >= 1) {
    const double first = out.mean_iterations(1, PrecondKind::AugIdentity);
    const double last = out.mean_iterations(k + 1, PrecondKind::AugIdentity);
    checks.push_back(at_least("aug-as-i_growth", (last - first) / first, limits::kMScalingMinIdentityGrowth,
                              "mean at m = " + std::to_string(k + 1) + " over mean at m = 1, minus 1"));
  }
  if (has(PrecondKind::AugSimple) && has(PrecondKind::AugIdentity)) {
    for (int m = 2; m <= k + 1; ++m) {
      const double a = out.mean_iterations(m, PrecondKind::AugSimple);
      const double b = out.mean_iterations(m, PrecondKind::AugIdentity);
      checks.push_back({"aug-as_below_aug-as-i[m=" + std::to_string(m) + "]", a < b, a, b,
                        "aug-as mean " + fmt(a) + " vs aug-as-i mean " + fmt(b)});
    }
  }
  return out;
}

WomersleyReport run_womersley_comparison(const ExperimentConfig& config) {
  if (config.mesh != MeshKind::Channel) throw ConfigError("the Womersley comparison needs a channel mesh");
  const Waveform& w = config.inlet.waveform;
  if (w.kind != WaveformKind::Sinusoid || w.phase != 0.0) {
    throw ConfigError("the Womersley comparison needs a sinusoidal inlet with zero phase");
  }
  if (config.time_mode != TimeMode::Unsteady) throw ConfigError("the Womersley comparison is unsteady");

  WomersleyReport out;
  out.time = config.num_steps() * config.dt;

  ExperimentConfig lm = config;
  lm.inlet.mode = SectionMode::LagrangeMultiplier;
  lm.precond = config.variants[0];
  const Problem lm_problem = make_problem(lm);
  out.lm = run_timeloop(lm_problem);
  if (config.variants.size() > 1) {
    Problem alt = lm_problem;
    alt.config.precond = config.variants[1];
    out.lm_alternate = run_timeloop(alt);
    out.agreement = compare_runs(to_string(config.variants[0]) + " vs " + to_string(config.variants[1]), out.lm,
                                 out.lm_alternate);
  }

  ExperimentConfig dir = config;
  dir.inlet.mode = SectionMode::DirichletProfile;
  dir.inlet.profile = ProfileShape::Parabolic;
  dir.precond = config.variants[0];
  const Problem dir_problem = make_problem(dir);
  out.dirichlet = run_timeloop(dir_problem);

  const ChannelFlowSpec spec{config.height, config.viscosity, w.amplitude, w.omega, 0.0};
  const auto exact = [&](double y) { return womersley_channel_velocity(spec, y, out.time); };
  std::vector<double> xs = config.sample_x;
  if (xs.empty()) xs = {0.0, config.length / 2.0};
  for (double x : xs) {
    const double e_lm = profile_l2_error(lm_problem.mesh, out.lm.velocity, x, config.height, exact).relative;
    const double e_dir =
        profile_l2_error(dir_problem.mesh, out.dirichlet.velocity, x, config.height, exact).relative;
    out.samples.push_back({x, e_lm, e_dir});
  }

  out.lm_flow_residual_ratio = worst_flow_residual_ratio(out.lm, config.krylov.rel_tol);
  const BoundaryTag inlet_tag{BoundaryKind::ProfileSection, 0};
  const SparseMatrix inlet_flux = assemble_tag_flux(dir_problem.mesh, std::span<const BoundaryTag>(&inlet_tag, 1));
  const double q = -w.value(out.time);
  out.dirichlet_flux_error =
      std::abs(compute_flow_rate(inlet_flux, out.dirichlet.velocity, 0) - q) / std::max(1.0, std::abs(q));

  auto& checks = out.checks;
  checks.push_back({"lm_converged", out.lm.all_converged(), out.lm.all_converged() ? 1.0 : 0.0, 1.0, ""});
  checks.push_back(
      {"dirichlet_converged", out.dirichlet.all_converged(), out.dirichlet.all_converged() ? 1.0 : 0.0, 1.0, ""});
  const auto& mid = *std::min_element(out.samples.begin(), out.samples.end(), [&](const auto& a, const auto& b) {
    return std::abs(a.x - config.length / 2) < std::abs(b.x - config.length / 2);
  });
  checks.push_back(at_most("lm_error_mid_channel", mid.lm_error, limits::kWomersleyMaxError,
                           "relative L2 at x = " + fmt(mid.x * 10.0) + " mm"));
  for (const auto& s : out.samples) {
    checks.push_back({"lm_below_dirichlet[x=" + fmt(s.x * 10.0) + " mm]", s.lm_error < s.dirichlet_error,
                      s.lm_error, s.dirichlet_error,
                      "LM " + fmt(s.lm_error) + " vs Dirichlet " + fmt(s.dirichlet_error)});
  }
  checks.push_back(at_most("lm_flow_residual", out.lm_flow_residual_ratio, limits::kFlowResidualFactor,
                           "max |Phi U - Q| / (rel_tol ||b||)"));
  checks.push_back(at_most("dirichlet_inlet_flux", out.dirichlet_flux_error, 1e-12));
  if (config.variants.size() > 1) add_agreement_checks(checks, out.agreement, config.krylov.rel_tol);
  return out;
}

VerifyReport run_verification_suite(const ExperimentConfig& config) {
  const Problem problem = make_problem(config);
  const double t = config.time_mode == TimeMode::SteadyStokes ? config.end_time : config.dt;
  // a non-trivial previous state so that K carries convection
  double q_in = config.inlet.waveform.value(t);
  if (q_in == 0.0) q_in = 1.0;
  const Vector u_prev = parabolic_field(problem.mesh, config.height, q_in);
  const BlockSystem sys = assemble_step(problem, u_prev, t);

  VerifyReport out;
  auto& checks = out.checks;
  const InnerSpecs exact_inner{};  // direct solves throughout

  PreconditionerState simple = build_simple(sys, exact_inner);
  PreconditionerState aug = build_aug_simple(sys, exact_inner);
  PreconditionerState aug_i = build_aug_identity(sys, exact_inner);
  perturb_l33(aug, config.l33_perturbation);
  if (sys.m() > 0) out.l33 = aug.l33(0, 0);

  // structural identities
  {
    const double diff = relative_max_difference(aug.sigma_pl, aug.sigma_lp.transpose());
    checks.push_back(at_most("sigma_pl_equals_sigma_lp_transpose", diff, limits::kSigmaTranspose));
  }
  if (sys.m() == 1) {
    checks.push_back({"l33_negative", out.l33 < 0.0, out.l33, 0.0, "L33 = " + fmt(out.l33)});
  }

  const std::pair<const char*, const PreconditionerState*> variants[] = {
      {"simple", &simple}, {"aug-as", &aug}, {"aug-as-i", &aug_i}};
  for (const auto& [name, st] : variants) {
    const double diff = relative_max_difference(multiply(lower_factor(*st), upper_factor(*st)),
                                                explicit_preconditioner(*st));
    checks.push_back(at_most(std::string("factored_vs_explicit.") + name, diff, limits::kFactorization));
  }

  // A_aug - P_S^aug: only blocks (1,2), (1,3), (2,3) may be non-zero
  {
    const SparseMatrix a = sys.assembled();
    const SparseMatrix e = error_matrix(aug, sys);
    const double a_scale = a.max_abs();
    const Index off[3] = {0, sys.nu(), sys.nu() + sys.np()};
    const Index len[3] = {sys.nu(), sys.np(), sys.m()};
    double zero_blocks = 0.0;
    const int zero_pattern[6][2] = {{0, 0}, {1, 0}, {1, 1}, {2, 0}, {2, 1}, {2, 2}};
    for (const auto& [r, c] : zero_pattern) {
      zero_blocks = std::max(zero_blocks, max_abs_block(e, off[r], off[c], len[r], len[c]) / a_scale);
    }
    checks.push_back(at_most("error_matrix.zero_blocks", zero_blocks, limits::kFactorization,
                             "blocks (1,1) (2,1) (2,2) (3,1) (3,2) (3,3)"));

    // the three formula blocks, rebuilt from the system blocks alone
    const Vector dinv = diag_inverse(sys.K);
    const SparseMatrix dinv_bt = scale(sys.Bt, dinv, {});
    const SparseMatrix dinv_phit = scale(sys.Phit, dinv, {});
    const SparseMatrix e12 = add(1.0, sys.Bt, -1.0, multiply(sys.K, dinv_bt));
    const SparseMatrix e13 = add(1.0, sys.Phit, -1.0, multiply(sys.K, dinv_phit));
    const SparseMatrix sigma = add(1.0, multiply(sys.B, dinv_bt), 1.0, sys.S);
    const SparseMatrix sigma_pl = multiply(sys.B, dinv_phit);
    const SparseMatrix e23 = add(1.0, sigma_pl, -1.0, multiply(sigma, scale(sigma_pl, diag_inverse(sigma), {})));
    const auto block_diff = [&](int r, int c, const SparseMatrix& expected) {
      return add(1.0, extract_block(e, off[r], off[c], len[r], len[c]), -1.0, expected).max_abs() / a_scale;
    };
    checks.push_back(at_most("error_matrix.block12", block_diff(0, 1, e12), limits::kFactorization));
    checks.push_back(at_most("error_matrix.block13", block_diff(0, 2, e13), limits::kFactorization));
    checks.push_back(at_most("error_matrix.block23", block_diff(1, 2, e23), limits::kFactorization));
  }

  // the exact augmented LU makes GMRES converge at once
  const LinearOperator op = [&sys](std::span<const double> x, std::span<double> y) { sys.apply(x, y); };
  const Vector b = sys.rhs();
  if (sys.size() <= 5000) {
    const PreconditionerState exact = build_exact_aug_lu(sys);
    const LinearOperator prec = [&exact](std::span<const double> r, std::span<double> z) {
      apply_exact_aug_lu(exact, r, z);
    };
    KrylovParams params;
    params.rel_tol = limits::kExactLuRelTol;
    params.restart = 10;
    params.max_iters = 10;
    const KrylovResult res = gmres(op, prec, b, {}, params);
    out.exact_lu_iterations = res.stats.converged ? res.stats.iterations : -1;
    checks.push_back({"exact_lu_iterations", res.stats.converged && res.stats.iterations <= limits::kExactLuMaxIterations,
                      static_cast<double>(res.stats.iterations), limits::kExactLuMaxIterations,
                      "relative residual " + fmt(res.stats.relative_residual())});
  } else {
    checks.push_back({"exact_lu_iterations", false, -1.0, limits::kExactLuMaxIterations,
                      "system has " + std::to_string(sys.size()) + " unknowns, the exact LU takes at most 5000"});
  }

  // the solver sequences coincide with the preconditioner applications on (F, 0[, Q])
  const Vector zero_g(static_cast<std::size_t>(sys.np()), 0.0);
  {
    Vector r(b.size(), 0.0), z(b.size(), 0.0);
    std::copy(sys.F.begin(), sys.F.end(), r.begin());
    apply_simple(simple, r, z);
    const MonolithicVector x = simple_like_solve(simple, sys.F, zero_g);
    const auto n = static_cast<std::size_t>(sys.nu() + sys.np());
    checks.push_back(at_most("simple_like_equivalence",
                             relative_difference(x.all().subspan(0, n), std::span<const double>(z).subspan(0, n)),
                             limits::kSolverEquivalence));
  }
  {
    Vector r(b.size(), 0.0), z(b.size(), 0.0);
    std::copy(sys.F.begin(), sys.F.end(), r.begin());
    std::copy(sys.Q.begin(), sys.Q.end(), r.begin() + sys.nu() + sys.np());
    apply_aug_simple(aug, r, z);
    const MonolithicVector x = aug_simple_like_solve(aug, sys.F, zero_g, sys.Q);
    checks.push_back(
        at_most("aug_simple_like_equivalence", relative_difference(x.all(), z), limits::kSolverEquivalence));

    Vector diff = spmv(sys.Phi, x.u());
    axpy(-1.0, sys.Q, diff);
    const double qn = norm2(sys.Q) > 0.0 ? norm2(sys.Q) : 1.0;
    checks.push_back(at_most("aug_simple_like_flow_rate", norm_inf(diff) / qn, limits::kFlowExactness,
                             "max |Phi U - Q| / ||Q||"));
  }

  // one preconditioned correction from any iterate restores the flow rates
  {
    std::mt19937 rng(20240917);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector x(b.size());
    for (double& v : x) v = dist(rng);
    Vector r = b;
    Vector ax(b.size());
    sys.apply(x, ax);
    axpy(-1.0, ax, r);
    Vector z(b.size(), 0.0);
    apply_aug_simple(aug, r, z);
    axpy(1.0, z, x);
    const auto u = std::span<const double>(x).subspan(0, static_cast<std::size_t>(sys.nu()));
    Vector diff = spmv(sys.Phi, u);
    const double ref = std::max({1.0, norm2(sys.Q), norm_inf(diff)});
    axpy(-1.0, sys.Q, diff);
    checks.push_back(at_most("one_step_flow_rate", norm_inf(diff) / ref, limits::kFlowExactness,
                             "random iterate, one aug-as correction"));
  }
  return out;
}

}  // namespace dflow
