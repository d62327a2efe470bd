#include "dflow/io.hpp"

#include <fstream>
#include <iomanip>

#include "dflow/errors.hpp"

namespace dflow {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(path.string() + ": cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << std::setprecision(17);
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError(path.string() + ": write failed");
}

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

void export_csv(const RunRecord& record, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "step,time,variant,iterations,true_residual,flow_residual_max,wall_seconds\n";
  for (const auto& s : record.steps) {
    out << s.step << ',' << s.time << ',' << record.variant << ',' << s.iterations << ',' << s.true_residual << ','
        << s.flow_residual_max << ',' << s.wall_seconds << '\n';
  }
  finish(out, path);
}

void export_m_scaling_csv(const MScalingResult& result, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "m,variant,mean_iterations,max_iterations,wall_seconds\n";
  for (const auto& r : result.rows) {
    out << r.m << ',' << to_string(r.variant) << ',' << r.mean_iterations << ',' << r.max_iterations << ','
        << r.wall_seconds << '\n';
  }
  finish(out, path);
}

void export_womersley_csv(const WomersleyReport& report, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "x_mm,lm_error,dirichlet_error\n";
  for (const auto& s : report.samples) out << s.x * 10.0 << ',' << s.lm_error << ',' << s.dirichlet_error << '\n';
  finish(out, path);
}

void export_checks_csv(const std::vector<Check>& checks, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "name,passed,value,limit,detail\n";
  for (const auto& c : checks) {
    out << quoted(c.name) << ',' << (c.passed ? 1 : 0) << ',' << c.value << ',' << c.limit << ','
        << quoted(c.detail) << '\n';
  }
  finish(out, path);
}

void export_vtk(const Mesh& mesh, std::span<const double> velocity, std::span<const double> pressure,
                const std::filesystem::path& path) {
  const auto n = static_cast<std::size_t>(mesh.num_vertices());
  if (!velocity.empty() && velocity.size() != 2 * n) throw ShapeError("export_vtk: velocity length mismatch");
  if (!pressure.empty() && pressure.size() != n) throw ShapeError("export_vtk: pressure length mismatch");

  auto out = open_output(path);
  out << "# vtk DataFile Version 2.0\ndefective-flow\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << n << " double\n";
  for (const auto& p : mesh.vertices()) out << p.x << ' ' << p.y << " 0\n";
  const auto nt = mesh.triangles().size();
  out << "CELLS " << nt << ' ' << 4 * nt << '\n';
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (std::size_t i = 0; i < nt; ++i) out << "5\n";
  if (!velocity.empty() || !pressure.empty()) out << "POINT_DATA " << n << '\n';
  if (!velocity.empty()) {
    out << "VECTORS velocity double\n";
    for (std::size_t v = 0; v < n; ++v) out << velocity[2 * v] << ' ' << velocity[2 * v + 1] << " 0\n";
  }
  if (!pressure.empty()) {
    out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (double p : pressure) out << p << '\n';
  }
  finish(out, path);
}

}  // namespace dflow
