#ifndef DFLOW_MESH_HPP
#define DFLOW_MESH_HPP

#include <array>
#include <span>
#include <vector>

#include "dflow/vector.hpp"

namespace dflow {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

enum class BoundaryKind {
  Wall,            ///< no-slip
  Neumann,         ///< homogeneous traction
  FlowSection,     ///< flow rate enforced by a Lagrange multiplier
  ProfileSection,  ///< flow rate enforced by a prescribed Dirichlet profile
};

struct BoundaryTag {
  BoundaryKind kind = BoundaryKind::Wall;
  int index = -1;  ///< section index for FlowSection / ProfileSection, else -1

  friend bool operator==(const BoundaryTag&, const BoundaryTag&) = default;
};

struct BoundaryEdge {
  std::array<Index, 2> vertices{};
  Index triangle = -1;
  BoundaryTag tag;
  Point normal;  ///< outward unit normal
  double length = 0.0;
};

/// How a flow-rate section is prescribed.
enum class SectionMode { LagrangeMultiplier, DirichletProfile };

enum class PortSide { Top, Bottom };

struct PortSpec {
  PortSide side = PortSide::Top;
  double x0 = 0.0;
  double x1 = 0.0;
  SectionMode mode = SectionMode::LagrangeMultiplier;
};

/// 2-D triangulation with tagged boundary edges.
///
/// Sections are numbered from 0. `flow_section_port()[i]` and
/// `profile_section_port()[i]` give the originating port of each section:
/// -1 for the left inlet, otherwise the position in the port list.
class Mesh {
 public:
  Mesh() = default;
  Mesh(std::vector<Point> vertices, std::vector<std::array<Index, 3>> triangles,
       std::vector<BoundaryEdge> edges, std::vector<int> flow_section_port,
       std::vector<int> profile_section_port);

  Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
  Index num_triangles() const { return static_cast<Index>(triangles_.size()); }
  int num_flow_sections() const { return static_cast<int>(flow_port_.size()); }
  int num_profile_sections() const { return static_cast<int>(profile_port_.size()); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<std::array<Index, 3>>& triangles() const { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return edges_; }
  const std::vector<int>& flow_section_port() const { return flow_port_; }
  const std::vector<int>& profile_section_port() const { return profile_port_; }

  double triangle_area(Index t) const;
  /// Vertices touching at least one Wall edge.
  std::vector<bool> wall_vertices() const;
  /// Distinct vertices of all edges carrying `tag`, sorted.
  std::vector<Index> tagged_vertices(BoundaryTag tag) const;

  /// Checks every structural invariant; throws ConfigError on violation.
  void validate() const;

 private:
  std::vector<Point> vertices_;
  std::vector<std::array<Index, 3>> triangles_;
  std::vector<BoundaryEdge> edges_;
  std::vector<int> flow_port_;
  std::vector<int> profile_port_;
};

/// Rectangle [0,length] x [0,height] split into nx-by-ny cells, two
/// triangles per cell with alternating diagonals. Left edge: inlet section,
/// right edge: Neumann, top and bottom: wall.
Mesh build_channel_mesh(double length, double height, Index nx, Index ny,
                        SectionMode inflow = SectionMode::LagrangeMultiplier);

/// Channel with extra ports cut into the top/bottom walls. The left inlet is
/// always a Lagrange-multiplier section (index 0); LM ports follow in
/// declaration order. Port ends must lie on vertical mesh lines.
Mesh build_manifold_mesh(double length, double height, Index nx, Index ny,
                         std::span<const PortSpec> ports);

/// Total length of the edges tagged FlowSection(i).
double section_length(const Mesh& mesh, int section);

/// Total length of the edges tagged with `tag`.
double tagged_length(const Mesh& mesh, BoundaryTag tag);

}  // namespace dflow

#endif  // DFLOW_MESH_HPP
