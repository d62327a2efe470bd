#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "dflow/config.hpp"
#include "dflow/errors.hpp"

using namespace dflow;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test.ini");
}

std::string message_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

const std::filesystem::path kConfigDir = DFLOW_CONFIG_DIR;

}  // namespace

TEST_CASE("empty file gives the defaults") {
  const auto c = parse("");
  CHECK(c.kind == ExperimentKind::Custom);
  CHECK(c.mesh == MeshKind::Channel);
  CHECK(c.length == doctest::Approx(1.0));
  CHECK(c.height == doctest::Approx(0.2));
  CHECK(c.viscosity == doctest::Approx(0.033));
  CHECK(c.precond == PrecondKind::AugSimple);
  CHECK(c.inner.velocity.kind == InnerKind::DirectLU);
  CHECK(c.krylov.rel_tol == 1e-8);
  CHECK(c.krylov.restart == 200);
  CHECK_FALSE(c.warm_start);
  CHECK(c.num_steps() == 1);
  CHECK(c.output_dir == "out/custom");
}

TEST_CASE("units are converted once") {
  const auto c = parse(
      "[mesh]\nlength_mm = 40\nheight_mm = 4\n"
      "[physics]\nviscosity_m2s = 1e-6\n"
      "[womersley]\nsample_x_mm = 0 12.5\n");
  CHECK(c.length == doctest::Approx(4.0));
  CHECK(c.height == doctest::Approx(0.4));
  CHECK(c.viscosity == doctest::Approx(0.01));
  REQUIRE(c.sample_x.size() == 2);
  CHECK(c.sample_x[1] == doctest::Approx(1.25));
}

TEST_CASE("manifold with ports") {
  const auto c = parse(
      "[mesh]\ntype = manifold\nlength_mm = 40\nheight_mm = 4\nnx = 40\nny = 4\nports = 2\n"
      "[port1]\nside = top\nx0_mm = 8\nx1_mm = 10\nwaveform = ramp\namplitude_cm2s = 0.5\nramp_s = 0.1\n"
      "[port2]\nside = bottom\nx0_mm = 14\nx1_mm = 16\nmode = dirichlet\nprofile = flat\n");
  REQUIRE(c.ports.size() == 2);
  CHECK(c.ports[0].side == PortSide::Top);
  CHECK(c.ports[0].x0 == doctest::Approx(0.8));
  CHECK(c.ports[0].section.waveform.value(0.05) == doctest::Approx(0.25));
  CHECK(c.ports[0].section.waveform.value(1.0) == doctest::Approx(0.5));
  CHECK(c.ports[1].section.mode == SectionMode::DirichletProfile);
  CHECK(c.ports[1].section.profile == ProfileShape::Flat);
  const Mesh mesh = build_mesh(c);
  CHECK(mesh.num_flow_sections() == 2);
  CHECK(mesh.num_profile_sections() == 1);
}

TEST_CASE("waveforms") {
  const Waveform s{WaveformKind::Sinusoid, 2.0, 0.0, 3.0, 0.5};
  CHECK(s.value(0.2) == doctest::Approx(2.0 * std::sin(0.6 + 0.5)));
  const Waveform r{WaveformKind::Ramp, 4.0, 0.1, 0.0, 0.0};
  CHECK(r.value(0.0) == 0.0);
  CHECK(r.value(0.025) == doctest::Approx(1.0));
  CHECK(r.value(0.3) == 4.0);
  CHECK(Waveform{WaveformKind::Constant, 1.5}.value(7.0) == 1.5);
}

TEST_CASE("solver section") {
  const auto c = parse(
      "[solver]\nprecond = exact-lu\ninner_velocity = ilu0\ninner_schur = jacobi:3\nflexible = yes\n"
      "rel_tol = 1e-10\nrestart = 50\nmax_iters = 100\ninitial_guess = previous\n"
      "[m_scaling]\nvariants = aug-as simple\n");
  CHECK(c.precond == PrecondKind::ExactAugLU);
  CHECK(c.inner.velocity.kind == InnerKind::ILU0);
  CHECK(c.inner.schur.sweeps == 3);
  CHECK(c.krylov.flexible);
  CHECK(c.krylov.restart == 50);
  CHECK(c.warm_start);
  CHECK(c.variants == std::vector<PrecondKind>{PrecondKind::AugSimple, PrecondKind::Simple});
}

TEST_CASE("time stepping") {
  CHECK(parse("[time]\ndt_s = 0.001\nend_s = 0.313\n").num_steps() == 313);
  CHECK(parse("[physics]\nmode = steady_stokes\n[time]\nend_s = 5\n").num_steps() == 1);
  CHECK(message_of("[time]\ndt_s = 0.01\nend_s = 0.015\n").find("multiple") != std::string::npos);
}

TEST_CASE("errors name the source, section and key") {
  CHECK(message_of("[mesh]\nlenght_mm = 3\n").find("unknown key 'lenght_mm' in [mesh]") != std::string::npos);
  CHECK(message_of("[meshes]\nnx = 2\n").find("unknown section [meshes]") != std::string::npos);
  CHECK(message_of("nx = 3\n").find("outside of any section") != std::string::npos);
  const std::string bad_number = message_of("[mesh]\nnx = ten\n");
  CHECK(bad_number.find("test.ini") != std::string::npos);
  CHECK(bad_number.find("nx") != std::string::npos);
  for (const std::string text : {"[mesh]\nnx = 1\n", "[mesh]\nnx = 4.5\n", "[mesh]\ntype = torus\n",
                           "[physics]\nviscosity_m2s = -1\n", "[physics]\nmode = euler\n",
                           "[physics]\nconvection = maybe\n", "[inlet]\nwaveform = square\n",
                           "[inlet]\nwaveform = sinusoid\n", "[inlet]\nwaveform = ramp\n",
                           "[solver]\nprecond = amg\n", "[solver]\ninner_velocity = jacobi:0\n",
                           "[solver]\nrestart = 300\nmax_iters = 100\n", "[solver]\ninitial_guess = random\n",
                           "[m_scaling]\nvariants = aug-as amg\n", "[womersley]\nsample_x_mm = 50\n",
                           "[womersley]\nsample_x_mm = left\n", "[mesh]\nports = 1\n",
                           "[mesh]\ntype = manifold\nports = 1\n[port1]\nside = top\n",
                           "[mesh]\ntype = manifold\nports = 1\n[port1]\nx0_mm = 1\nx1_mm = 2\nside = left\n",
                           "[mesh]\ntype = manifold\n[port1]\nx0_mm = 1\nx1_mm = 2\n", "[port]\nside = top\n"}) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse(text), ConfigError);
  }
}

TEST_CASE("a manifold needs a multiplier inlet") {
  const auto c = parse("[mesh]\ntype = manifold\nlength_mm = 40\nheight_mm = 4\nnx = 40\nny = 4\n"
                       "[inlet]\nmode = dirichlet\n");
  CHECK_THROWS_AS(build_mesh(c), ConfigError);
}

TEST_CASE("load_config") {
  CHECK_THROWS_AS(load_config("/nonexistent/dir/x.ini"), IoError);
  try {
    load_config("/nonexistent/dir/x.ini");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/dir/x.ini") != std::string::npos);
  }
}

TEST_CASE("shipped configs parse") {
  for (const std::string name : {"channel_verify.ini", "m_scaling.ini", "womersley.ini", "poiseuille.ini", "schema.ini"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_config(kConfigDir / name));
  }
  const auto m = load_config(kConfigDir / "m_scaling.ini");
  CHECK(m.kind == ExperimentKind::MScaling);
  CHECK(m.ports.size() == 4);
  const auto w = load_config(kConfigDir / "womersley.ini");
  CHECK(w.inlet.waveform.kind == WaveformKind::Sinusoid);
  CHECK(w.num_steps() == 313);
}
