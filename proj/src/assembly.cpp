#include "dflow/assembly.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "dflow/errors.hpp"

namespace dflow {

namespace {

struct ElementGeometry {
  double area;
  double diameter;
  std::array<Point, 3> grad;  // gradients of the barycentric coordinates
};

ElementGeometry element_geometry(const Mesh& mesh, Index t) {
  const auto& tri = mesh.triangles()[t];
  const Point& p0 = mesh.vertices()[tri[0]];
  const Point& p1 = mesh.vertices()[tri[1]];
  const Point& p2 = mesh.vertices()[tri[2]];
  const double area = mesh.triangle_area(t);
  const double h = std::max({std::hypot(p1.x - p0.x, p1.y - p0.y), std::hypot(p2.x - p1.x, p2.y - p1.y),
                             std::hypot(p0.x - p2.x, p0.y - p2.y)});
  if (!(area > 1e-14 * h * h)) throw AssemblyError("degenerate triangle " + std::to_string(t));
  const double inv2a = 1.0 / (2.0 * area);
  ElementGeometry g{area, h, {}};
  g.grad[0] = {(p1.y - p2.y) * inv2a, (p2.x - p1.x) * inv2a};
  g.grad[1] = {(p2.y - p0.y) * inv2a, (p0.x - p2.x) * inv2a};
  g.grad[2] = {(p0.y - p1.y) * inv2a, (p1.x - p0.x) * inv2a};
  return g;
}

// exact P1 mass: int phi_a phi_b = area/12 (1 + delta_ab)
double local_mass(double area, int a, int b) { return area / 12.0 * (a == b ? 2.0 : 1.0); }

double grad_dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y; }

}  // namespace

NSBlocks assemble_constant_blocks(const Mesh& mesh, double viscosity, double alpha) {
  if (!(viscosity > 0.0)) throw ConfigError("viscosity must be positive");
  if (!(alpha >= 0.0)) throw ConfigError("stabilization alpha must be non-negative");
  const Index nv = mesh.num_vertices();
  std::vector<Triplet> m_entries, a_entries, b_entries, s_entries;
  m_entries.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 18);
  a_entries.reserve(m_entries.capacity());
  b_entries.reserve(m_entries.capacity());
  s_entries.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);

  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = element_geometry(mesh, t);
    const auto& tri = mesh.triangles()[t];
    const double tau = alpha * g.diameter * g.diameter / viscosity;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const double mab = local_mass(g.area, a, b);
        const double kab = viscosity * g.area * grad_dot(g.grad[a], g.grad[b]);
        for (int c = 0; c < 2; ++c) {
          m_entries.push_back({velocity_dof(tri[a], c), velocity_dof(tri[b], c), mab});
          a_entries.push_back({velocity_dof(tri[a], c), velocity_dof(tri[b], c), kab});
        }
        s_entries.push_back({tri[a], tri[b], tau * g.area * grad_dot(g.grad[a], g.grad[b])});
        // B[l, j] = -(xi_l, d_c phi_b) with int xi_l = area / 3
        b_entries.push_back({tri[a], velocity_dof(tri[b], 0), -g.area / 3.0 * g.grad[b].x});
        b_entries.push_back({tri[a], velocity_dof(tri[b], 1), -g.area / 3.0 * g.grad[b].y});
      }
    }
  }

  NSBlocks blocks;
  blocks.num_vertices = nv;
  blocks.viscosity = viscosity;
  blocks.stabilization_alpha = alpha;
  blocks.mass = SparseMatrix::from_triplets(2 * nv, 2 * nv, m_entries);
  blocks.stiffness = SparseMatrix::from_triplets(2 * nv, 2 * nv, a_entries);
  blocks.divergence = SparseMatrix::from_triplets(nv, 2 * nv, b_entries);
  blocks.pressure_stabilization = SparseMatrix::from_triplets(nv, nv, s_entries);
  blocks.flux = assemble_flux_matrix(mesh, mesh.num_flow_sections());
  std::vector<BoundaryTag> profile_tags;
  for (int i = 0; i < mesh.num_profile_sections(); ++i) profile_tags.push_back({BoundaryKind::ProfileSection, i});
  blocks.profile_flux = assemble_tag_flux(mesh, profile_tags);
  return blocks;
}

SparseMatrix assemble_convection(const Mesh& mesh, std::span<const double> u_prev) {
  const Index n = 2 * mesh.num_vertices();
  if (static_cast<Index>(u_prev.size()) != n) {
    throw ShapeError("assemble_convection: advecting field has length " + std::to_string(u_prev.size()) +
                     ", expected " + std::to_string(n));
  }
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 18);
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const auto g = element_geometry(mesh, t);
    const auto& tri = mesh.triangles()[t];
    std::array<Point, 3> w;
    for (int e = 0; e < 3; ++e) w[e] = {u_prev[velocity_dof(tri[e], 0)], u_prev[velocity_dof(tri[e], 1)]};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        // int (sum_e w_e phi_e) . grad phi_b  phi_a
        double v = 0.0;
        for (int e = 0; e < 3; ++e) v += local_mass(g.area, a, e) * grad_dot(w[e], g.grad[b]);
        for (int c = 0; c < 2; ++c) entries.push_back({velocity_dof(tri[a], c), velocity_dof(tri[b], c), v});
      }
    }
  }
  return SparseMatrix::from_triplets(n, n, entries);
}

SparseMatrix assemble_tag_flux(const Mesh& mesh, std::span<const BoundaryTag> tags) {
  const Index n = 2 * mesh.num_vertices();
  std::vector<Triplet> entries;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    bool found = false;
    for (const auto& e : mesh.boundary_edges()) {
      if (!(e.tag == tags[i])) continue;
      found = true;
      for (Index v : e.vertices) {
        entries.push_back({static_cast<Index>(i), velocity_dof(v, 0), 0.5 * e.length * e.normal.x});
        entries.push_back({static_cast<Index>(i), velocity_dof(v, 1), 0.5 * e.length * e.normal.y});
      }
    }
    if (!found) throw AssemblyError("flux matrix: section " + std::to_string(tags[i].index) + " is empty");
  }
  return SparseMatrix::from_triplets(static_cast<Index>(tags.size()), n, entries);
}

SparseMatrix assemble_flux_matrix(const Mesh& mesh, int m) {
  if (m < 0 || m > mesh.num_flow_sections()) {
    throw IndexError("assemble_flux_matrix: mesh has " + std::to_string(mesh.num_flow_sections()) +
                     " flow sections, requested " + std::to_string(m));
  }
  std::vector<BoundaryTag> tags;
  for (int i = 0; i < m; ++i) tags.push_back({BoundaryKind::FlowSection, i});
  return assemble_tag_flux(mesh, tags);
}

DirichletData wall_dirichlet(const Mesh& mesh) {
  DirichletData data;
  const auto wall = mesh.wall_vertices();
  for (Index v = 0; v < mesh.num_vertices(); ++v) {
    if (!wall[v]) continue;
    data.dofs.push_back(velocity_dof(v, 0));
    data.dofs.push_back(velocity_dof(v, 1));
  }
  data.values.assign(data.dofs.size(), 0.0);
  return data;
}

double profile_value(ProfileShape shape, double s, double span, double flow_rate) {
  if (!(span > 0.0)) throw ConfigError("profile: zero-length section");
  if (shape == ProfileShape::Flat) return flow_rate / span;
  // a s (span - s) with a span^3 / 6 = Q
  return 6.0 * flow_rate / (span * span * span) * s * (span - s);
}

DirichletData dirichlet_profile(const Mesh& mesh, BoundaryTag section, double flow_rate, ProfileShape shape) {
  const auto verts = mesh.tagged_vertices(section);
  if (verts.empty()) throw IndexError("dirichlet_profile: section has no edges");
  Point normal{};
  double span = 0.0;
  for (const auto& e : mesh.boundary_edges()) {
    if (!(e.tag == section)) continue;
    if (span > 0.0 && std::abs(e.normal.x * normal.y - e.normal.y * normal.x) > 1e-12) {
      throw ConfigError("dirichlet_profile: section is not a straight segment");
    }
    normal = e.normal;
    span += e.length;
  }
  if (!(span > 0.0)) throw ConfigError("dirichlet_profile: zero-length section");

  // arc position measured from the extreme vertex along the tangent
  const Point tangent{-normal.y, normal.x};
  double s_min = INFINITY;
  for (Index v : verts) {
    const auto& p = mesh.vertices()[v];
    s_min = std::min(s_min, p.x * tangent.x + p.y * tangent.y);
  }
  const auto wall = mesh.wall_vertices();
  DirichletData data;
  for (Index v : verts) {
    const auto& p = mesh.vertices()[v];
    const double s = p.x * tangent.x + p.y * tangent.y - s_min;
    const double un = wall[v] ? 0.0 : profile_value(shape, s, span, 1.0);
    data.dofs.push_back(velocity_dof(v, 0));
    data.values.push_back(un * normal.x);
    data.dofs.push_back(velocity_dof(v, 1));
    data.values.push_back(un * normal.y);
  }

  // rescale by the discrete flux so that Phi_row . values == flow_rate
  const std::array<BoundaryTag, 1> tags{section};
  const SparseMatrix row = assemble_tag_flux(mesh, tags);
  double flux = 0.0;
  for (std::size_t k = 0; k < data.dofs.size(); ++k) flux += row.coeff(0, data.dofs[k]) * data.values[k];
  if (!(std::abs(flux) > 0.0)) throw ConfigError("dirichlet_profile: profile carries no discrete flux");
  const double factor = flow_rate / flux;
  for (double& v : data.values) v *= factor;
  return merge_dirichlet(std::span<const DirichletData>(&data, 1));
}

DirichletData merge_dirichlet(std::span<const DirichletData> parts) {
  std::vector<std::pair<Index, double>> all;
  for (const auto& part : parts) {
    if (part.dofs.size() != part.values.size()) throw ShapeError("Dirichlet data: dofs/values length mismatch");
    for (std::size_t k = 0; k < part.dofs.size(); ++k) all.emplace_back(part.dofs[k], part.values[k]);
  }
  // stable sort keeps the first occurrence of each dof in front
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  DirichletData out;
  for (const auto& [dof, value] : all) {
    if (!out.dofs.empty() && out.dofs.back() == dof) continue;
    out.dofs.push_back(dof);
    out.values.push_back(value);
  }
  return out;
}

void BlockSystem::apply(std::span<const double> x, std::span<double> y) const {
  if (static_cast<Index>(x.size()) != size() || static_cast<Index>(y.size()) != size()) {
    throw ShapeError("BlockSystem::apply: length mismatch");
  }
  const auto xu = x.subspan(0, nu());
  const auto xp = x.subspan(nu(), np());
  const auto xl = x.subspan(nu() + np(), m());
  auto yu = y.subspan(0, nu());
  auto yp = y.subspan(nu(), np());
  auto yl = y.subspan(nu() + np(), m());
  K.multiply(xu, yu);
  Bt.multiply_add(1.0, xp, yu);
  Phit.multiply_add(1.0, xl, yu);
  S.multiply(xp, yp);
  B.multiply_add(-1.0, xu, yp);
  Phi.multiply(xu, yl);
}

Vector BlockSystem::rhs() const {
  Vector b;
  b.reserve(static_cast<std::size_t>(size()));
  b.insert(b.end(), F.begin(), F.end());
  b.insert(b.end(), G.begin(), G.end());
  b.insert(b.end(), Q.begin(), Q.end());
  return b;
}

SparseMatrix BlockSystem::assembled() const {
  SparseMatrix neg_b = B;
  for (double& v : neg_b.values()) v = -v;
  const std::array<Index, 3> sizes{nu(), np(), m()};
  return block_matrix({{&K, &Bt, &Phit}, {&neg_b, &S, nullptr}, {&Phi, nullptr, nullptr}}, sizes, sizes);
}

Vector BlockSystem::full_velocity(std::span<const double> u_free) const {
  if (static_cast<Index>(u_free.size()) != nu()) throw ShapeError("full_velocity: length mismatch");
  Vector u(static_cast<std::size_t>(full_velocity_size), 0.0);
  for (std::size_t k = 0; k < free_dofs.size(); ++k) u[free_dofs[k]] = u_free[k];
  for (std::size_t k = 0; k < dirichlet.dofs.size(); ++k) u[dirichlet.dofs[k]] = dirichlet.values[k];
  return u;
}

BlockSystem make_block_system(SparseMatrix K, SparseMatrix B, SparseMatrix S, SparseMatrix Phi, Vector F,
                              Vector G, Vector Q, SparseMatrix M, double dt) {
  const Index nu = K.rows();
  if (!K.is_square() || B.cols() != nu || !S.is_square() || S.rows() != B.rows() || Phi.cols() != nu ||
      static_cast<Index>(F.size()) != nu || static_cast<Index>(G.size()) != B.rows() ||
      static_cast<Index>(Q.size()) != Phi.rows()) {
    throw ShapeError("make_block_system: inconsistent block sizes");
  }
  BlockSystem sys;
  sys.Bt = B.transpose();
  sys.Phit = Phi.transpose();
  sys.K = std::move(K);
  sys.B = std::move(B);
  sys.S = std::move(S);
  sys.Phi = std::move(Phi);
  sys.F = std::move(F);
  sys.G = std::move(G);
  sys.Q = std::move(Q);
  sys.M = M.rows() == 0 ? SparseMatrix::zero(nu, nu) : std::move(M);
  sys.dt = dt;
  sys.free_dofs.resize(static_cast<std::size_t>(nu));
  for (Index i = 0; i < nu; ++i) sys.free_dofs[i] = i;
  sys.full_velocity_size = nu;
  return sys;
}

BlockSystem build_time_step_system(const Mesh& mesh, const NSBlocks& blocks, const StepData& step) {
  const Index n = blocks.velocity_size();
  const bool unsteady = step.mode == TimeMode::Unsteady;
  if (unsteady && !(step.dt > 0.0)) throw ConfigError("time step must be positive");
  if (!step.u_prev.empty() && static_cast<Index>(step.u_prev.size()) != n) {
    throw ShapeError("build_time_step_system: previous velocity has wrong length");
  }
  if (static_cast<Index>(step.flow_rates.size()) != blocks.num_sections()) {
    throw ShapeError("build_time_step_system: expected " + std::to_string(blocks.num_sections()) +
                     " flow rates, got " + std::to_string(step.flow_rates.size()));
  }
  if (step.dirichlet.dofs.size() != step.dirichlet.values.size()) {
    throw ShapeError("build_time_step_system: Dirichlet dofs/values length mismatch");
  }
  for (std::size_t k = 0; k < step.dirichlet.dofs.size(); ++k) {
    const Index d = step.dirichlet.dofs[k];
    if (d < 0 || d >= n) throw IndexError("Dirichlet dof " + std::to_string(d) + " out of range");
    if (k > 0 && d <= step.dirichlet.dofs[k - 1]) throw ConfigError("Dirichlet dofs must be sorted and unique");
  }

  const Vector u_prev = step.u_prev.empty() ? Vector(static_cast<std::size_t>(n), 0.0)
                                            : Vector(step.u_prev.begin(), step.u_prev.end());

  SparseMatrix K = blocks.stiffness;
  Vector F(static_cast<std::size_t>(n), 0.0);
  // (f, psi_j) = f_c * sum_k M[j,k] for the constant body force
  {
    Vector fvec(static_cast<std::size_t>(n));
    for (Index v = 0; v < blocks.num_vertices; ++v) {
      fvec[velocity_dof(v, 0)] = step.body_force.x;
      fvec[velocity_dof(v, 1)] = step.body_force.y;
    }
    blocks.mass.multiply(fvec, F);
  }
  if (unsteady) {
    K = add(1.0 / step.dt, blocks.mass, 1.0, K);
    if (step.convection) K = add(1.0, K, 1.0, assemble_convection(mesh, u_prev));
    blocks.mass.multiply_add(1.0 / step.dt, u_prev, F);
  }
  if (step.extra_operator != nullptr) K = add(1.0, K, 1.0, *step.extra_operator);

  std::vector<char> constrained(static_cast<std::size_t>(n), 0);
  Vector lift(static_cast<std::size_t>(n), 0.0);
  for (std::size_t k = 0; k < step.dirichlet.dofs.size(); ++k) {
    constrained[step.dirichlet.dofs[k]] = 1;
    lift[step.dirichlet.dofs[k]] = step.dirichlet.values[k];
  }
  std::vector<Index> free;
  for (Index j = 0; j < n; ++j) {
    if (!constrained[j]) free.push_back(j);
  }
  std::vector<Index> all_p(static_cast<std::size_t>(blocks.pressure_size()));
  for (Index l = 0; l < blocks.pressure_size(); ++l) all_p[l] = l;
  std::vector<Index> all_sections(static_cast<std::size_t>(blocks.num_sections()));
  for (Index i = 0; i < blocks.num_sections(); ++i) all_sections[i] = i;

  const Vector k_lift = spmv(K, lift);
  const Vector b_lift = spmv(blocks.divergence, lift);
  const Vector phi_lift = spmv(blocks.flux, lift);

  Vector F_red(free.size());
  for (std::size_t k = 0; k < free.size(); ++k) F_red[k] = F[free[k]] - k_lift[free[k]];
  Vector Q_red(step.flow_rates);
  for (std::size_t i = 0; i < Q_red.size(); ++i) Q_red[i] -= phi_lift[i];

  SparseMatrix M_red = unsteady ? submatrix(blocks.mass, free, free) : SparseMatrix{};
  BlockSystem sys = make_block_system(submatrix(K, free, free), submatrix(blocks.divergence, all_p, free),
                                      blocks.pressure_stabilization, submatrix(blocks.flux, all_sections, free),
                                      std::move(F_red), b_lift, std::move(Q_red), std::move(M_red),
                                      unsteady ? step.dt : 0.0);
  sys.free_dofs = std::move(free);
  sys.dirichlet = step.dirichlet;
  sys.full_velocity_size = n;
  return sys;
}

}  // namespace dflow
