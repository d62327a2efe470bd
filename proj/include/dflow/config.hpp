#ifndef DFLOW_CONFIG_HPP
#define DFLOW_CONFIG_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dflow/assembly.hpp"
#include "dflow/krylov.hpp"
#include "dflow/mesh.hpp"
#include "dflow/precond.hpp"

namespace dflow {

enum class ExperimentKind { MScaling, Womersley, Verify, Custom };
enum class MeshKind { Channel, Manifold };
enum class WaveformKind { Constant, Ramp, Sinusoid };

std::string to_string(ExperimentKind kind);

/// Flow rate per unit depth (cm^2/s) as a function of time (s).
struct Waveform {
  WaveformKind kind = WaveformKind::Constant;
  double amplitude = 0.0;
  double ramp_time = 0.0;  ///< Ramp: linear rise over [0, ramp_time]
  double omega = 0.0;      ///< Sinusoid: amplitude * sin(omega t + phase)
  double phase = 0.0;

  double value(double t) const;
};

/// One boundary section with a prescribed flow rate. The inlet waveform
/// counts inflow as positive; port waveforms count outflow as positive.
struct SectionConfig {
  SectionMode mode = SectionMode::LagrangeMultiplier;
  ProfileShape profile = ProfileShape::Parabolic;
  Waveform waveform;
};

struct PortConfig {
  PortSide side = PortSide::Top;
  double x0 = 0.0;  ///< cm
  double x1 = 0.0;  ///< cm
  SectionConfig section;
};

/// Parsed experiment description. Every length is in cm and the viscosity
/// in cm^2/s; the file uses mm and m^2/s and is converted once on parse.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Custom;
  std::string name = "run";

  MeshKind mesh = MeshKind::Channel;
  double length = 1.0;
  double height = 0.2;
  Index nx = 80;
  Index ny = 20;
  SectionConfig inlet;
  std::vector<PortConfig> ports;

  double viscosity = 0.033;
  double stabilization_alpha = 0.05;
  TimeMode time_mode = TimeMode::Unsteady;
  bool convection = true;
  double dt = 0.01;
  double end_time = 0.1;

  PrecondKind precond = PrecondKind::AugSimple;
  InnerSpecs inner;
  KrylovParams krylov;
  bool warm_start = false;  ///< previous step's solution as initial guess

  std::string output_dir = "out";
  int snapshot_stride = 0;  ///< 0 keeps only the final state
  bool write_vtk = false;
  bool fail_fast = false;

  std::vector<PrecondKind> variants{PrecondKind::AugSimple, PrecondKind::AugIdentity};
  std::vector<double> sample_x;  ///< cm; empty means {0, length / 2}
  double l33_perturbation = 0.0;

  /// Number of time steps (1 in steady mode).
  int num_steps() const;
  void validate() const;
};

ExperimentConfig parse_config(std::istream& in, const std::string& source = "<stream>");
ExperimentConfig load_config(const std::filesystem::path& path);

Mesh build_mesh(const ExperimentConfig& config);

}  // namespace dflow

#endif  // DFLOW_CONFIG_HPP
