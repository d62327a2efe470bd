#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dflow/errors.hpp"
#include "dflow/experiments.hpp"
#include "dflow/oracle.hpp"
#include "dflow/timeloop.hpp"

using namespace dflow;

namespace {

ExperimentConfig small_channel() {
  ExperimentConfig c;
  c.length = 0.5;
  c.height = 0.2;
  c.nx = 20;
  c.ny = 6;
  c.dt = 0.01;
  c.end_time = 0.03;
  c.inlet.waveform = {WaveformKind::Ramp, 0.5, 0.02};
  c.krylov.rel_tol = 1e-10;
  return c;
}

double max_abs(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("no inflow stays at rest") {
  auto c = small_channel();
  c.inlet.waveform = {WaveformKind::Constant, 0.0};
  const auto rec = run_timeloop(c);
  REQUIRE(rec.steps.size() == 3);
  for (const auto& s : rec.steps) {
    CHECK(s.converged);
    CHECK(s.iterations <= 1);
  }
  CHECK(max_abs(rec.velocity) == 0.0);
  CHECK(max_abs(rec.pressure) == 0.0);
}

TEST_CASE("inlet sign convention") {
  const auto c = small_channel();
  const Problem p = make_problem(c);
  REQUIRE(p.flux_sections.size() == 1);
  CHECK(p.flow_rates(0.01)[0] == doctest::Approx(-0.25));
  CHECK(p.flow_rates(1.0)[0] == doctest::Approx(-0.5));
}

TEST_CASE("runs are deterministic") {
  const auto c = small_channel();
  const auto a = run_timeloop(c);
  const auto b = run_timeloop(c);
  CHECK(a.velocity == b.velocity);
  CHECK(a.pressure == b.pressure);
  for (std::size_t i = 0; i < a.steps.size(); ++i) CHECK(a.steps[i].iterations == b.steps[i].iterations);
}

TEST_CASE("every preconditioner reaches the same state") {
  auto c = small_channel();
  const auto ref = run_timeloop(c);
  for (PrecondKind k : {PrecondKind::Simple, PrecondKind::AugIdentity, PrecondKind::ExactAugLU}) {
    c.precond = k;
    const auto rec = run_timeloop(c);
    CHECK(rec.all_converged());
    CHECK(relative_difference(rec.velocity, ref.velocity) <= 1e-7);
  }
}

TEST_CASE("property: the flow-rate residual stays within the solver tolerance") {
  for (PrecondKind k : {PrecondKind::AugSimple, PrecondKind::AugIdentity}) {
    auto c = small_channel();
    c.precond = k;
    c.inlet.waveform = {WaveformKind::Sinusoid, 0.5, 0.0, 20.0, 0.3};
    c.end_time = 0.05;
    const auto rec = run_timeloop(c);
    CHECK(worst_flow_residual_ratio(rec, c.krylov.rel_tol) <= limits::kFlowResidualFactor);
  }
}

TEST_CASE("non-convergence is recorded, or thrown with fail_fast") {
  auto c = small_channel();
  c.precond = PrecondKind::Simple;
  c.krylov.rel_tol = 1e-14;
  c.krylov.restart = 2;
  c.krylov.max_iters = 2;
  const auto rec = run_timeloop(c);
  CHECK_FALSE(rec.all_converged());
  CHECK(rec.max_iterations() == 2);
  c.fail_fast = true;
  CHECK_THROWS_AS(run_timeloop(c), ConvergenceError);
}

TEST_CASE("snapshots") {
  auto c = small_channel();
  c.end_time = 0.04;
  c.snapshot_stride = 2;
  const auto rec = run_timeloop(c);
  REQUIRE(rec.snapshots.size() == 2);
  CHECK(rec.snapshots[0].step == 2);
  CHECK(rec.snapshots[1].time == doctest::Approx(0.04));
  CHECK(rec.snapshots[1].velocity == rec.velocity);
}

TEST_CASE("unsteady flow settles to Poiseuille") {
  // 10 x 2 mm channel on the shipped 80 x 20 mesh, held at a constant flow
  // rate until t = 20 H^2 / nu
  ExperimentConfig c;
  c.length = 1.0;
  c.height = 0.2;
  c.nx = 80;
  c.ny = 20;
  c.inlet.waveform = {WaveformKind::Ramp, 0.2, 1.0};
  const double t_end = 20.0 * c.height * c.height / c.viscosity;
  c.dt = t_end / 24.0;
  c.end_time = t_end;
  const auto rec = run_timeloop(c);
  REQUIRE(rec.all_converged());
  const ChannelFlowSpec spec{c.height, c.viscosity, 0.0, 0.0, 0.2};
  const auto mid = profile_l2_error(make_problem(c).mesh, rec.velocity, 0.5, c.height,
                                    [&](double y) { return poiseuille_velocity(spec, y); });
  CHECK(mid.relative < 0.02);
}
