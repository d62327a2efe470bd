#include "dflow/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "dflow/errors.hpp"

namespace dflow {

namespace {

namespace pt = boost::property_tree;

constexpr double kMmToCm = 0.1;
constexpr double kM2sToCm2s = 1.0e4;

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"experiment", {"kind", "name"}},
      {"mesh", {"type", "length_mm", "height_mm", "nx", "ny", "ports"}},
      {"physics", {"viscosity_m2s", "stabilization_alpha", "mode", "convection"}},
      {"time", {"dt_s", "end_s"}},
      {"inlet", {"mode", "profile", "waveform", "amplitude_cm2s", "ramp_s", "omega_rad_s", "phase_rad"}},
      {"port<N>",
       {"side", "x0_mm", "x1_mm", "mode", "profile", "waveform", "amplitude_cm2s", "ramp_s", "omega_rad_s",
        "phase_rad"}},
      {"solver",
       {"precond", "inner_velocity", "inner_schur", "flexible", "rel_tol", "abs_tol", "restart", "max_iters",
        "initial_guess"}},
      {"output", {"dir", "snapshot_stride", "vtk"}},
      {"m_scaling", {"variants"}},
      {"womersley", {"sample_x_mm"}},
      {"verify", {"l33_perturbation"}},
  };
  return keys;
}

class Section {
 public:
  Section(const pt::ptree* tree, std::string name, std::string source)
      : tree_(tree), name_(std::move(name)), source_(std::move(source)) {}

  bool present() const { return tree_ != nullptr; }

  std::optional<std::string> raw(const std::string& key) const {
    if (tree_ == nullptr) return std::nullopt;
    const auto it = tree_->find(key);
    if (it == tree_->not_found()) return std::nullopt;
    return it->second.data();
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    return raw(key).value_or(fallback);
  }

  double number(const std::string& key, double fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    try {
      std::size_t used = 0;
      const double x = std::stod(*v, &used);
      if (used != v->size() || !std::isfinite(x)) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      throw error(key, "'" + *v + "' is not a number");
    }
  }

  long integer(const std::string& key, long fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    try {
      std::size_t used = 0;
      const long x = std::stol(*v, &used);
      if (used != v->size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      throw error(key, "'" + *v + "' is not an integer");
    }
  }

  bool flag(const std::string& key, bool fallback) const {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "0") return false;
    throw error(key, "'" + *v + "' is not a boolean");
  }

  std::vector<std::string> words(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream in(text(key, ""));
    for (std::string w; in >> w;) out.push_back(w);
    return out;
  }

  ConfigError error(const std::string& key, const std::string& what) const {
    return ConfigError(source_ + ": [" + name_ + "] " + key + ": " + what);
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
  std::string source_;
};

std::string schema_name(const std::string& section) {
  if (section.rfind("port", 0) == 0 && section.size() > 4 &&
      section.find_first_not_of("0123456789", 4) == std::string::npos) {
    return "port<N>";
  }
  return section;
}

SectionMode parse_mode(const Section& s) {
  const std::string v = s.text("mode", "lm");
  if (v == "lm") return SectionMode::LagrangeMultiplier;
  if (v == "dirichlet") return SectionMode::DirichletProfile;
  throw s.error("mode", "expected lm or dirichlet, got '" + v + "'");
}

ProfileShape parse_profile(const Section& s) {
  const std::string v = s.text("profile", "parabolic");
  if (v == "parabolic") return ProfileShape::Parabolic;
  if (v == "flat") return ProfileShape::Flat;
  throw s.error("profile", "expected parabolic or flat, got '" + v + "'");
}

Waveform parse_waveform(const Section& s) {
  Waveform w;
  const std::string kind = s.text("waveform", "constant");
  if (kind == "constant") {
    w.kind = WaveformKind::Constant;
  } else if (kind == "ramp") {
    w.kind = WaveformKind::Ramp;
  } else if (kind == "sinusoid") {
    w.kind = WaveformKind::Sinusoid;
  } else {
    throw s.error("waveform", "expected constant, ramp or sinusoid, got '" + kind + "'");
  }
  w.amplitude = s.number("amplitude_cm2s", 0.0);
  w.ramp_time = s.number("ramp_s", 0.0);
  w.omega = s.number("omega_rad_s", 0.0);
  w.phase = s.number("phase_rad", 0.0);
  if (w.kind == WaveformKind::Ramp && !(w.ramp_time > 0.0)) throw s.error("ramp_s", "must be positive");
  if (w.kind == WaveformKind::Sinusoid && !(w.omega > 0.0)) throw s.error("omega_rad_s", "must be positive");
  return w;
}

SectionConfig parse_section(const Section& s) {
  SectionConfig c;
  c.mode = parse_mode(s);
  c.profile = parse_profile(s);
  c.waveform = parse_waveform(s);
  return c;
}

ExperimentKind parse_kind(const Section& s) {
  const std::string v = s.text("kind", "custom");
  if (v == "m_scaling") return ExperimentKind::MScaling;
  if (v == "womersley") return ExperimentKind::Womersley;
  if (v == "verify") return ExperimentKind::Verify;
  if (v == "custom") return ExperimentKind::Custom;
  throw s.error("kind", "expected m_scaling, womersley, verify or custom, got '" + v + "'");
}

template <class Fn>
auto wrap(const Section& s, const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw s.error(key, e.what());
  }
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::MScaling: return "m_scaling";
    case ExperimentKind::Womersley: return "womersley";
    case ExperimentKind::Verify: return "verify";
    case ExperimentKind::Custom: return "custom";
  }
  return "unknown";
}

double Waveform::value(double t) const {
  switch (kind) {
    case WaveformKind::Constant: return amplitude;
    case WaveformKind::Ramp: return amplitude * std::min(t / ramp_time, 1.0);
    case WaveformKind::Sinusoid: return amplitude * std::sin(omega * t + phase);
  }
  return 0.0;
}

int ExperimentConfig::num_steps() const {
  if (time_mode == TimeMode::SteadyStokes) return 1;
  return static_cast<int>(std::lround(end_time / dt));
}

void ExperimentConfig::validate() const {
  if (!(length > 0.0) || !(height > 0.0)) throw ConfigError("mesh dimensions must be positive");
  if (nx < 2 || ny < 2) throw ConfigError("nx and ny must be at least 2");
  if (mesh == MeshKind::Channel && !ports.empty()) throw ConfigError("a channel mesh has no ports");
  if (!(viscosity > 0.0)) throw ConfigError("viscosity must be positive");
  if (!(stabilization_alpha >= 0.0)) throw ConfigError("stabilization_alpha must be non-negative");
  if (time_mode == TimeMode::Unsteady) {
    if (!(dt > 0.0)) throw ConfigError("dt_s must be positive");
    if (!(end_time > 0.0)) throw ConfigError("end_s must be positive");
    const int n = num_steps();
    if (n < 1 || std::abs(n * dt - end_time) > 1e-9 * end_time) {
      throw ConfigError("end_s must be a positive multiple of dt_s");
    }
  }
  if (snapshot_stride < 0) throw ConfigError("snapshot_stride must be non-negative");
  if (variants.empty()) throw ConfigError("m_scaling variants must not be empty");
  krylov.validate();
  for (double x : sample_x) {
    if (x < 0.0 || x > length) throw ConfigError("womersley sample_x_mm outside the channel");
  }
}

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  for (const auto& [name, tree] : root) {
    if (tree.empty() && !tree.data().empty()) {
      throw ConfigError(source + ": key '" + name + "' outside of any section");
    }
    const auto it = schema().find(schema_name(name));
    if (it == schema().end()) throw ConfigError(source + ": unknown section [" + name + "]");
    for (const auto& [key, value] : tree) {
      (void)value;
      if (!it->second.count(key)) throw ConfigError(source + ": unknown key '" + key + "' in [" + name + "]");
    }
  }

  auto section = [&](const std::string& name) {
    const auto it = root.find(name);
    return Section(it == root.not_found() ? nullptr : &it->second, name, source);
  };

  ExperimentConfig c;
  const Section experiment = section("experiment");
  c.kind = parse_kind(experiment);
  c.name = experiment.text("name", to_string(c.kind));

  const Section mesh = section("mesh");
  const std::string type = mesh.text("type", "channel");
  if (type == "channel") {
    c.mesh = MeshKind::Channel;
  } else if (type == "manifold") {
    c.mesh = MeshKind::Manifold;
  } else {
    throw mesh.error("type", "expected channel or manifold, got '" + type + "'");
  }
  c.length = mesh.number("length_mm", 10.0) * kMmToCm;
  c.height = mesh.number("height_mm", 2.0) * kMmToCm;
  c.nx = static_cast<Index>(mesh.integer("nx", 80));
  c.ny = static_cast<Index>(mesh.integer("ny", 20));
  const long num_ports = mesh.integer("ports", 0);
  if (num_ports < 0) throw mesh.error("ports", "must be non-negative");

  c.inlet = parse_section(section("inlet"));
  for (long p = 1; p <= num_ports; ++p) {
    const std::string name = "port" + std::to_string(p);
    const Section s = section(name);
    if (!s.present()) throw ConfigError(source + ": missing section [" + name + "]");
    PortConfig port;
    const std::string side = s.text("side", "top");
    if (side == "top") {
      port.side = PortSide::Top;
    } else if (side == "bottom") {
      port.side = PortSide::Bottom;
    } else {
      throw s.error("side", "expected top or bottom, got '" + side + "'");
    }
    if (!s.raw("x0_mm") || !s.raw("x1_mm")) throw ConfigError(source + ": [" + name + "] needs x0_mm and x1_mm");
    port.x0 = s.number("x0_mm", 0.0) * kMmToCm;
    port.x1 = s.number("x1_mm", 0.0) * kMmToCm;
    port.section = parse_section(s);
    c.ports.push_back(port);
  }
  for (const auto& [name, tree] : root) {
    (void)tree;
    if (schema_name(name) == "port<N>" && std::stol(name.substr(4)) > num_ports) {
      throw ConfigError(source + ": section [" + name + "] beyond the declared port count");
    }
  }

  const Section physics = section("physics");
  c.viscosity = physics.number("viscosity_m2s", 3.3e-6) * kM2sToCm2s;
  c.stabilization_alpha = physics.number("stabilization_alpha", 0.05);
  const std::string mode = physics.text("mode", "unsteady");
  if (mode == "unsteady") {
    c.time_mode = TimeMode::Unsteady;
  } else if (mode == "steady_stokes") {
    c.time_mode = TimeMode::SteadyStokes;
  } else {
    throw physics.error("mode", "expected unsteady or steady_stokes, got '" + mode + "'");
  }
  c.convection = physics.flag("convection", true);

  const Section time = section("time");
  c.dt = time.number("dt_s", 0.01);
  c.end_time = time.number("end_s", c.dt);

  const Section solver = section("solver");
  c.precond = wrap(solver, "precond", [&] { return parse_precond_kind(solver.text("precond", "aug-as")); });
  c.inner.velocity =
      wrap(solver, "inner_velocity", [&] { return parse_inner_solver(solver.text("inner_velocity", "direct")); });
  c.inner.schur =
      wrap(solver, "inner_schur", [&] { return parse_inner_solver(solver.text("inner_schur", "direct")); });
  c.krylov.flexible = solver.flag("flexible", false);
  c.krylov.rel_tol = solver.number("rel_tol", 1e-8);
  c.krylov.abs_tol = solver.number("abs_tol", 1e-50);
  c.krylov.restart = static_cast<int>(solver.integer("restart", 200));
  c.krylov.max_iters = static_cast<int>(solver.integer("max_iters", 2000));
  const std::string guess = solver.text("initial_guess", "zero");
  if (guess == "zero") {
    c.warm_start = false;
  } else if (guess == "previous") {
    c.warm_start = true;
  } else {
    throw solver.error("initial_guess", "expected zero or previous, got '" + guess + "'");
  }

  const Section output = section("output");
  c.output_dir = output.text("dir", "out/" + c.name);
  c.snapshot_stride = static_cast<int>(output.integer("snapshot_stride", 0));
  c.write_vtk = output.flag("vtk", false);

  const Section mscale = section("m_scaling");
  if (mscale.raw("variants")) {
    c.variants.clear();
    for (const auto& v : mscale.words("variants")) {
      c.variants.push_back(wrap(mscale, "variants", [&] { return parse_precond_kind(v); }));
    }
  }

  const Section wom = section("womersley");
  for (const auto& v : wom.words("sample_x_mm")) {
    try {
      c.sample_x.push_back(std::stod(v) * kMmToCm);
    } catch (const std::exception&) {
      throw wom.error("sample_x_mm", "'" + v + "' is not a number");
    }
  }

  c.l33_perturbation = section("verify").number("l33_perturbation", 0.0);

  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

Mesh build_mesh(const ExperimentConfig& config) {
  if (config.mesh == MeshKind::Channel) {
    return build_channel_mesh(config.length, config.height, config.nx, config.ny, config.inlet.mode);
  }
  if (config.inlet.mode != SectionMode::LagrangeMultiplier) {
    throw ConfigError("manifold meshes always use a Lagrange-multiplier inlet");
  }
  std::vector<PortSpec> ports;
  for (const auto& p : config.ports) ports.push_back({p.side, p.x0, p.x1, p.section.mode});
  return build_manifold_mesh(config.length, config.height, config.nx, config.ny, ports);
}

}  // namespace dflow
