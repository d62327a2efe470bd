// defective-flow: runs the configured experiment and reports pass/fail.
//
//   defective-flow run <config> [--out DIR] [--precond P] [--inner S] [--fail-fast]
//   defective-flow verify <config>
//
// Exit status 0 only when every assertion of the experiment passes.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "dflow/config.hpp"
#include "dflow/errors.hpp"
#include "dflow/experiments.hpp"
#include "dflow/io.hpp"
#include "dflow/timeloop.hpp"

namespace fs = std::filesystem;
using namespace dflow;

namespace {

constexpr int kExitFailedCheck = 1;
constexpr int kExitError = 2;

void print_checks(const std::vector<Check>& checks) {
  for (const auto& c : checks) {
    std::printf("%s  %-48s value=%-12.4g limit=%-12.4g %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value,
                c.limit, c.detail.c_str());
  }
}

void print_run(const RunRecord& r) {
  std::printf("%-10s steps=%zu mean_its=%.2f max_its=%d converged=%s wall=%.2fs\n", r.variant.c_str(),
              r.steps.size(), r.mean_iterations(), r.max_iterations(), r.all_converged() ? "yes" : "no",
              r.wall_seconds());
}

void write_vtk_series(const Problem& problem, const RunRecord& r, const fs::path& dir) {
  for (const auto& s : r.snapshots) {
    export_vtk(problem.mesh, s.velocity, s.pressure, dir / ("state_" + std::to_string(s.step) + ".vtk"));
  }
  export_vtk(problem.mesh, r.velocity, r.pressure, dir / "final.vtk");
}

int run_custom(const ExperimentConfig& config, const fs::path& out) {
  const Problem problem = make_problem(config);
  const RunRecord r = run_timeloop(problem);
  export_csv(r, out / "run.csv");
  if (config.write_vtk) write_vtk_series(problem, r, out);
  print_run(r);

  std::vector<Check> checks;
  checks.push_back({"all_steps_converged", r.all_converged(), r.all_converged() ? 1.0 : 0.0, 1.0, ""});
  const double ratio = worst_flow_residual_ratio(r, config.krylov.rel_tol);
  checks.push_back({"flow_residual", ratio <= limits::kFlowResidualFactor, ratio, limits::kFlowResidualFactor,
                    "max |Phi U - Q| / (rel_tol ||b||)"});
  print_checks(checks);
  export_checks_csv(checks, out / "checks.csv");
  return all_passed(checks) ? 0 : kExitFailedCheck;
}

int run_m_scaling_cli(const ExperimentConfig& config, const fs::path& out) {
  const MScalingResult res = run_m_scaling(config);
  export_m_scaling_csv(res, out / "m_scaling.csv");
  for (const auto& [m, r] : res.runs) {
    export_csv(r, out / ("m" + std::to_string(m) + "_" + r.variant + ".csv"));
  }
  std::printf("%3s  %-10s %10s %8s %10s\n", "m", "variant", "mean_its", "max_its", "wall_s");
  for (const auto& row : res.rows) {
    std::printf("%3d  %-10s %10.2f %8d %10.2f\n", row.m, to_string(row.variant).c_str(), row.mean_iterations,
                row.max_iterations, row.wall_seconds);
  }
  print_checks(res.checks);
  export_checks_csv(res.checks, out / "checks.csv");
  return all_passed(res.checks) ? 0 : kExitFailedCheck;
}

int run_womersley_cli(const ExperimentConfig& config, const fs::path& out) {
  const WomersleyReport rep = run_womersley_comparison(config);
  export_womersley_csv(rep, out / "womersley.csv");
  export_csv(rep.lm, out / "lm.csv");
  export_csv(rep.dirichlet, out / "dirichlet.csv");
  if (!rep.lm_alternate.steps.empty()) export_csv(rep.lm_alternate, out / "lm_alternate.csv");
  if (config.write_vtk) {
    const Problem lm = make_problem(config);
    export_vtk(lm.mesh, rep.lm.velocity, rep.lm.pressure, out / "lm_final.vtk");
  }
  std::printf("t = %.4f s\n%8s %12s %12s\n", rep.time, "x_mm", "lm_err", "dirichlet_err");
  for (const auto& s : rep.samples) std::printf("%8.3f %12.5f %12.5f\n", s.x * 10.0, s.lm_error, s.dirichlet_error);
  print_checks(rep.checks);
  export_checks_csv(rep.checks, out / "checks.csv");
  return all_passed(rep.checks) ? 0 : kExitFailedCheck;
}

int run_verify_cli(const ExperimentConfig& config, const std::optional<fs::path>& out) {
  const VerifyReport rep = run_verification_suite(config);
  print_checks(rep.checks);
  if (out) export_checks_csv(rep.checks, *out / "checks.csv");
  return all_passed(rep.checks) ? 0 : kExitFailedCheck;
}

void check_thread_env() {
  const char* env = std::getenv("DEFECTIVE_FLOW_THREADS");
  if (env == nullptr) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || n < 1) {
    throw ConfigError(std::string("DEFECTIVE_FLOW_THREADS must be a positive integer, got '") + env + "'");
  }
  if (n > 1) std::fprintf(stderr, "note: DEFECTIVE_FLOW_THREADS=%ld ignored, runs are serial\n", n);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Navier-Stokes with defective flow-rate conditions: experiments and checks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string precond;
  std::string inner;
  bool fail_fast = false;

  auto* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (default from the config)");
  run->add_option("--precond", precond, "preconditioner")
      ->check(CLI::IsMember({"aug-as", "aug-as-i", "simple", "exact-lu"}));
  run->add_option("--inner", inner, "inner solver for K and Sigma: direct|ilu0|jacobi:k|chebyshev:k");
  run->add_flag("--fail-fast", fail_fast, "stop at the first non-converged step");

  auto* verify = app.add_subcommand("verify", "algebraic checks of the preconditioners");
  verify->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    check_thread_env();
    ExperimentConfig config = load_config(config_path);

    if (*verify) return run_verify_cli(config, std::nullopt);

    if (!precond.empty()) config.precond = parse_precond_kind(precond);
    if (!inner.empty()) config.inner.velocity = config.inner.schur = parse_inner_solver(inner);
    if (fail_fast) config.fail_fast = true;
    const fs::path out = out_dir.empty() ? fs::path(config.output_dir) : fs::path(out_dir);
    fs::create_directories(out);

    switch (config.kind) {
      case ExperimentKind::MScaling: return run_m_scaling_cli(config, out);
      case ExperimentKind::Womersley: return run_womersley_cli(config, out);
      case ExperimentKind::Verify: return run_verify_cli(config, out);
      case ExperimentKind::Custom: return run_custom(config, out);
    }
    return kExitError;
  } catch (const ConvergenceError& e) {
    std::cerr << "not converged: " << e.what() << '\n';
    return kExitFailedCheck;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
}
