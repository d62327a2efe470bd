#ifndef DFLOW_IO_HPP
#define DFLOW_IO_HPP

#include <filesystem>
#include <span>
#include <vector>

#include "dflow/experiments.hpp"
#include "dflow/mesh.hpp"
#include "dflow/timeloop.hpp"

namespace dflow {

/// One row per time step:
/// step,time,variant,iterations,true_residual,flow_residual_max,wall_seconds
void export_csv(const RunRecord& record, const std::filesystem::path& path);

/// m,variant,mean_iterations,max_iterations,wall_seconds
void export_m_scaling_csv(const MScalingResult& result, const std::filesystem::path& path);

/// x_mm,lm_error,dirichlet_error
void export_womersley_csv(const WomersleyReport& report, const std::filesystem::path& path);

/// name,passed,value,limit,detail
void export_checks_csv(const std::vector<Check>& checks, const std::filesystem::path& path);

/// Legacy ASCII VTK (version 2.0) unstructured grid of triangles with point
/// data "velocity" (2 entries per vertex, written as 3-vectors) and
/// "pressure". Either field may be empty to omit it.
void export_vtk(const Mesh& mesh, std::span<const double> velocity, std::span<const double> pressure,
                const std::filesystem::path& path);

}  // namespace dflow

#endif  // DFLOW_IO_HPP
