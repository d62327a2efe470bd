#include "dflow/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "dflow/errors.hpp"

namespace dflow {

namespace {

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

struct EdgeUse {
  Index triangle;
  Index from;
  Index to;
  int count;
};

// Boundary edges keep the counter-clockwise orientation of their triangle.
std::vector<EdgeUse> find_boundary_edges(const std::vector<std::array<Index, 3>>& triangles) {
  std::map<std::pair<Index, Index>, EdgeUse> uses;
  for (Index t = 0; t < static_cast<Index>(triangles.size()); ++t) {
    const auto& tri = triangles[t];
    for (int e = 0; e < 3; ++e) {
      const Index a = tri[e];
      const Index b = tri[(e + 1) % 3];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = uses.try_emplace({key.first, key.second}, EdgeUse{t, a, b, 0});
      ++it->second.count;
    }
  }
  std::vector<EdgeUse> out;
  for (const auto& [key, use] : uses) {
    if (use.count == 1) out.push_back(use);
  }
  return out;
}

bool is_multiple(double value, double step) {
  const double q = value / step;
  return std::abs(q - std::round(q)) <= 1e-9 * std::max(1.0, std::abs(q));
}

Mesh build_rectangle(double length, double height, Index nx, Index ny, SectionMode inflow,
                     std::span<const PortSpec> ports) {
  if (!(length > 0.0) || !(height > 0.0)) throw ConfigError("mesh: dimensions must be positive");
  if (nx < 2 || ny < 2) throw ConfigError("mesh: nx and ny must be at least 2");

  const double dx = length / static_cast<double>(nx);
  const double dy = height / static_cast<double>(ny);
  auto vid = [ny](Index i, Index j) { return i * (ny + 1) + j; };

  std::vector<Point> vertices;
  vertices.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (Index i = 0; i <= nx; ++i) {
    for (Index j = 0; j <= ny; ++j) {
      // exact end coordinates keep section lengths refinement-invariant
      const double x = (i == nx) ? length : static_cast<double>(i) * dx;
      const double y = (j == ny) ? height : static_cast<double>(j) * dy;
      vertices.push_back({x, y});
    }
  }

  std::vector<std::array<Index, 3>> triangles;
  triangles.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (Index i = 0; i < nx; ++i) {
    for (Index j = 0; j < ny; ++j) {
      const Index a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      if ((i + j) % 2 == 0) {
        triangles.push_back({a, b, c});
        triangles.push_back({a, c, d});
      } else {
        triangles.push_back({a, b, d});
        triangles.push_back({b, c, d});
      }
    }
  }

  // port validation
  for (std::size_t p = 0; p < ports.size(); ++p) {
    const auto& port = ports[p];
    if (!(port.x0 < port.x1)) throw ConfigError("port " + std::to_string(p) + ": empty span");
    if (!(port.x0 > 0.0) || !(port.x1 < length)) {
      throw ConfigError("port " + std::to_string(p) + ": span must lie strictly inside (0, length)");
    }
    if (!is_multiple(port.x0, dx) || !is_multiple(port.x1, dx)) {
      throw ConfigError("port " + std::to_string(p) + ": span ends not aligned with the mesh");
    }
    for (std::size_t q = 0; q < p; ++q) {
      const auto& other = ports[q];
      if (other.side == port.side && port.x0 < other.x1 && other.x0 < port.x1) {
        throw ConfigError("ports " + std::to_string(q) + " and " + std::to_string(p) + " overlap");
      }
    }
  }

  // section numbering: inlet first, then ports in declaration order per mode
  std::vector<int> flow_port;
  std::vector<int> profile_port;
  BoundaryTag inlet_tag;
  if (inflow == SectionMode::LagrangeMultiplier) {
    inlet_tag = {BoundaryKind::FlowSection, 0};
    flow_port.push_back(-1);
  } else {
    inlet_tag = {BoundaryKind::ProfileSection, 0};
    profile_port.push_back(-1);
  }
  std::vector<BoundaryTag> port_tags;
  for (std::size_t p = 0; p < ports.size(); ++p) {
    if (ports[p].mode == SectionMode::LagrangeMultiplier) {
      port_tags.push_back({BoundaryKind::FlowSection, static_cast<int>(flow_port.size())});
      flow_port.push_back(static_cast<int>(p));
    } else {
      port_tags.push_back({BoundaryKind::ProfileSection, static_cast<int>(profile_port.size())});
      profile_port.push_back(static_cast<int>(p));
    }
  }

  const double tol = 1e-9 * std::max(dx, dy);
  std::vector<BoundaryEdge> edges;
  for (const auto& use : find_boundary_edges(triangles)) {
    const Point& p0 = vertices[use.from];
    const Point& p1 = vertices[use.to];
    const double ex = p1.x - p0.x;
    const double ey = p1.y - p0.y;
    BoundaryEdge edge;
    edge.vertices = {use.from, use.to};
    edge.triangle = use.triangle;
    edge.length = std::hypot(ex, ey);
    edge.normal = {ey / edge.length, -ex / edge.length};
    const Point mid{0.5 * (p0.x + p1.x), 0.5 * (p0.y + p1.y)};

    if (std::abs(mid.x) < tol) {
      edge.normal = {-1.0, 0.0};
      edge.tag = inlet_tag;
    } else if (std::abs(mid.x - length) < tol) {
      edge.normal = {1.0, 0.0};
      edge.tag = {BoundaryKind::Neumann, -1};
    } else {
      const bool top = std::abs(mid.y - height) < tol;
      edge.normal = top ? Point{0.0, 1.0} : Point{0.0, -1.0};
      edge.tag = {BoundaryKind::Wall, -1};
      const PortSide side = top ? PortSide::Top : PortSide::Bottom;
      for (std::size_t p = 0; p < ports.size(); ++p) {
        if (ports[p].side == side && mid.x > ports[p].x0 && mid.x < ports[p].x1) {
          edge.tag = port_tags[p];
        }
      }
    }
    edges.push_back(edge);
  }

  return Mesh(std::move(vertices), std::move(triangles), std::move(edges), std::move(flow_port),
              std::move(profile_port));
}

}  // namespace

Mesh::Mesh(std::vector<Point> vertices, std::vector<std::array<Index, 3>> triangles,
           std::vector<BoundaryEdge> edges, std::vector<int> flow_section_port,
           std::vector<int> profile_section_port)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      edges_(std::move(edges)),
      flow_port_(std::move(flow_section_port)),
      profile_port_(std::move(profile_section_port)) {
  validate();
}

double Mesh::triangle_area(Index t) const {
  const auto& tri = triangles_[t];
  return signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
}

std::vector<bool> Mesh::wall_vertices() const {
  std::vector<bool> wall(vertices_.size(), false);
  for (const auto& e : edges_) {
    if (e.tag.kind == BoundaryKind::Wall) {
      wall[e.vertices[0]] = true;
      wall[e.vertices[1]] = true;
    }
  }
  return wall;
}

std::vector<Index> Mesh::tagged_vertices(BoundaryTag tag) const {
  std::vector<Index> out;
  for (const auto& e : edges_) {
    if (e.tag == tag) {
      out.push_back(e.vertices[0]);
      out.push_back(e.vertices[1]);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void Mesh::validate() const {
  const Index nv = num_vertices();
  for (Index t = 0; t < num_triangles(); ++t) {
    for (Index v : triangles_[t]) {
      if (v < 0 || v >= nv) throw ConfigError("mesh: triangle " + std::to_string(t) + " has invalid vertex");
    }
    if (!(triangle_area(t) > 0.0)) {
      throw ConfigError("mesh: triangle " + std::to_string(t) + " has non-positive area");
    }
  }

  const auto boundary = find_boundary_edges(triangles_);
  if (boundary.size() != edges_.size()) {
    throw ConfigError("mesh: " + std::to_string(edges_.size()) + " tagged edges but " +
                      std::to_string(boundary.size()) + " boundary edges");
  }
  std::map<std::pair<Index, Index>, Index> owner;
  for (const auto& use : boundary) owner[std::minmax(use.from, use.to)] = use.triangle;

  std::vector<int> flow_count(flow_port_.size(), 0);
  std::vector<int> profile_count(profile_port_.size(), 0);
  for (const auto& e : edges_) {
    const auto it = owner.find(std::minmax(e.vertices[0], e.vertices[1]));
    if (it == owner.end() || it->second != e.triangle) {
      throw ConfigError("mesh: tagged edge does not belong to exactly one triangle");
    }
    if (std::abs(std::hypot(e.normal.x, e.normal.y) - 1.0) > 1e-12) {
      throw ConfigError("mesh: boundary normal is not unit length");
    }
    const auto& tri = triangles_[e.triangle];
    Index opposite = tri[0];
    for (Index v : tri) {
      if (v != e.vertices[0] && v != e.vertices[1]) opposite = v;
    }
    const Point& a = vertices_[e.vertices[0]];
    const Point& b = vertices_[e.vertices[1]];
    const Point& o = vertices_[opposite];
    const double mx = 0.5 * (a.x + b.x) - o.x;
    const double my = 0.5 * (a.y + b.y) - o.y;
    if (!(mx * e.normal.x + my * e.normal.y > 0.0)) throw ConfigError("mesh: boundary normal points inward");

    if (e.tag.kind == BoundaryKind::FlowSection) {
      if (e.tag.index < 0 || e.tag.index >= num_flow_sections()) {
        throw ConfigError("mesh: flow section index out of range");
      }
      ++flow_count[e.tag.index];
    } else if (e.tag.kind == BoundaryKind::ProfileSection) {
      if (e.tag.index < 0 || e.tag.index >= num_profile_sections()) {
        throw ConfigError("mesh: profile section index out of range");
      }
      ++profile_count[e.tag.index];
    }
  }
  for (std::size_t i = 0; i < flow_count.size(); ++i) {
    if (flow_count[i] == 0) throw ConfigError("mesh: flow section " + std::to_string(i) + " is empty");
  }
  for (std::size_t i = 0; i < profile_count.size(); ++i) {
    if (profile_count[i] == 0) throw ConfigError("mesh: profile section " + std::to_string(i) + " is empty");
  }
}

Mesh build_channel_mesh(double length, double height, Index nx, Index ny, SectionMode inflow) {
  return build_rectangle(length, height, nx, ny, inflow, {});
}

Mesh build_manifold_mesh(double length, double height, Index nx, Index ny, std::span<const PortSpec> ports) {
  return build_rectangle(length, height, nx, ny, SectionMode::LagrangeMultiplier, ports);
}

double tagged_length(const Mesh& mesh, BoundaryTag tag) {
  double total = 0.0;
  for (const auto& e : mesh.boundary_edges()) {
    if (e.tag == tag) total += e.length;
  }
  return total;
}

double section_length(const Mesh& mesh, int section) {
  if (section < 0 || section >= mesh.num_flow_sections()) {
    throw IndexError("section_length: unknown flow section " + std::to_string(section));
  }
  return tagged_length(mesh, {BoundaryKind::FlowSection, section});
}

}  // namespace dflow
