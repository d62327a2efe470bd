#include "dflow/oracle.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <string>

#include "dflow/errors.hpp"

namespace dflow {

namespace {

using Complex = std::complex<double>;

// 6-point rule of degree 4 on the reference triangle (barycentric, weight)
struct QuadPoint {
  double l0, l1, l2, weight;
};

constexpr double kA = 0.445948490915965;
constexpr double kB = 0.091576213509771;
constexpr double kWa = 0.223381589678011;
constexpr double kWb = 0.109951743655322;

constexpr std::array<QuadPoint, 6> kRule{{
    {kA, kA, 1.0 - 2.0 * kA, kWa},
    {kA, 1.0 - 2.0 * kA, kA, kWa},
    {1.0 - 2.0 * kA, kA, kA, kWa},
    {kB, kB, 1.0 - 2.0 * kB, kWb},
    {kB, 1.0 - 2.0 * kB, kB, kWb},
    {1.0 - 2.0 * kB, kB, kB, kWb},
}};

// cosh(k s) / cosh(k H/2) for |s| <= H/2 without overflow (Re k > 0)
Complex cosh_ratio(Complex k, double s, double half) {
  const double a = std::abs(s);
  return std::exp(k * (a - half)) * (1.0 + std::exp(-2.0 * k * a)) / (1.0 + std::exp(-2.0 * k * half));
}

Complex tanh_stable(Complex z) {
  const Complex e = std::exp(-2.0 * z);
  return (1.0 - e) / (1.0 + e);
}

struct WomersleyCoefficients {
  Complex k;
  Complex g;  ///< complex forcing amplitude
};

WomersleyCoefficients womersley_coefficients(const ChannelFlowSpec& spec) {
  spec.validate();
  if (spec.omega == 0.0) throw ConfigError("womersley: omega = 0, use poiseuille_velocity");
  const Complex iw(0.0, spec.omega);
  const Complex k = std::sqrt(iw / spec.viscosity);
  const double h = spec.height;
  const Complex g = iw * spec.amplitude / (h - 2.0 / k * tanh_stable(k * h / 2.0));
  return {k, g};
}

void check_velocity_size(const Mesh& mesh, std::span<const double> velocity) {
  if (static_cast<Index>(velocity.size()) != 2 * mesh.num_vertices()) {
    throw ShapeError("velocity field has " + std::to_string(velocity.size()) + " entries, mesh needs " +
                     std::to_string(2 * mesh.num_vertices()));
  }
}

Point map_point(const Mesh& mesh, Index t, const QuadPoint& q) {
  const auto& tri = mesh.triangles()[t];
  const Point& a = mesh.vertices()[tri[0]];
  const Point& b = mesh.vertices()[tri[1]];
  const Point& c = mesh.vertices()[tri[2]];
  return {q.l0 * a.x + q.l1 * b.x + q.l2 * c.x, q.l0 * a.y + q.l1 * b.y + q.l2 * c.y};
}

}  // namespace

void ChannelFlowSpec::validate() const {
  if (!(height > 0.0)) throw ConfigError("channel flow: height must be positive");
  if (!(viscosity > 0.0)) throw ConfigError("channel flow: viscosity must be positive");
  if (!(omega >= 0.0)) throw ConfigError("channel flow: omega must be non-negative");
}

double poiseuille_velocity(const ChannelFlowSpec& spec, double y) {
  spec.validate();
  const double h = spec.height;
  const double slack = 1e-12 * h;
  if (y < -slack || y > h + slack) {
    throw ConfigError("poiseuille: y = " + std::to_string(y) + " outside [0, H]");
  }
  return 6.0 * spec.flow_rate / (h * h * h) * y * (h - y);
}

double womersley_channel_velocity(const ChannelFlowSpec& spec, double y, double t) {
  const auto [k, g] = womersley_coefficients(spec);
  const double h = spec.height;
  const double slack = 1e-12 * h;
  if (y < -slack || y > h + slack) {
    throw ConfigError("womersley: y = " + std::to_string(y) + " outside [0, H]");
  }
  const Complex iw(0.0, spec.omega);
  const Complex u_hat = g / iw * (1.0 - cosh_ratio(k, y - h / 2.0, h / 2.0));
  return std::imag(u_hat * std::exp(iw * t));
}

double womersley_forcing(const ChannelFlowSpec& spec, double t) {
  const auto [k, g] = womersley_coefficients(spec);
  (void)k;
  return std::imag(g * std::exp(Complex(0.0, spec.omega * t)));
}

double compute_flow_rate(const SparseMatrix& phi, std::span<const double> u, Index section) {
  if (section < 0 || section >= phi.rows()) {
    throw IndexError("compute_flow_rate: section " + std::to_string(section) + " out of range");
  }
  if (static_cast<Index>(u.size()) != phi.cols()) throw ShapeError("compute_flow_rate: length mismatch");
  const auto c = phi.row_columns(section);
  const auto v = phi.row_values(section);
  double q = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) q += v[k] * u[c[k]];
  return q;
}

double l2_error(const Mesh& mesh, std::span<const double> nodal, const ScalarField& exact) {
  if (static_cast<Index>(nodal.size()) != mesh.num_vertices()) {
    throw ShapeError("l2_error: nodal field size does not match the mesh");
  }
  double sum = 0.0;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const double area = mesh.triangle_area(t);
    for (const auto& q : kRule) {
      const double uh = q.l0 * nodal[tri[0]] + q.l1 * nodal[tri[1]] + q.l2 * nodal[tri[2]];
      const double e = uh - exact(map_point(mesh, t, q));
      sum += q.weight * area * e * e;
    }
  }
  return std::sqrt(sum);
}

double l2_error(const Mesh& mesh, std::span<const double> velocity, const VectorField& exact) {
  check_velocity_size(mesh, velocity);
  double sum = 0.0;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const double area = mesh.triangle_area(t);
    for (const auto& q : kRule) {
      const std::array<double, 3> l{q.l0, q.l1, q.l2};
      double ux = 0.0, uy = 0.0;
      for (int a = 0; a < 3; ++a) {
        ux += l[a] * velocity[2 * tri[a]];
        uy += l[a] * velocity[2 * tri[a] + 1];
      }
      const Point u = exact(map_point(mesh, t, q));
      sum += q.weight * area * ((ux - u.x) * (ux - u.x) + (uy - u.y) * (uy - u.y));
    }
  }
  return std::sqrt(sum);
}

double l2_norm(const Mesh& mesh, const VectorField& exact) {
  double sum = 0.0;
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.triangle_area(t);
    for (const auto& q : kRule) {
      const Point u = exact(map_point(mesh, t, q));
      sum += q.weight * area * (u.x * u.x + u.y * u.y);
    }
  }
  return std::sqrt(sum);
}

Point evaluate_velocity(const Mesh& mesh, std::span<const double> velocity, Point p) {
  check_velocity_size(mesh, velocity);
  const auto& vs = mesh.vertices();
  for (Index t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const Point& a = vs[tri[0]];
    const Point& b = vs[tri[1]];
    const Point& c = vs[tri[2]];
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    const double l1 = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
    const double l2 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
    const double l0 = 1.0 - l1 - l2;
    constexpr double eps = -1e-12;
    if (l0 >= eps && l1 >= eps && l2 >= eps) {
      const std::array<double, 3> l{l0, l1, l2};
      Point u{0.0, 0.0};
      for (int k = 0; k < 3; ++k) {
        u.x += l[k] * velocity[2 * tri[k]];
        u.y += l[k] * velocity[2 * tri[k] + 1];
      }
      return u;
    }
  }
  throw IndexError("evaluate_velocity: point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                   ") is outside the mesh");
}

ProfileError profile_l2_error(const Mesh& mesh, std::span<const double> velocity, double x0, double height,
                              const std::function<double(double)>& exact, int component, int intervals) {
  if (component != 0 && component != 1) throw IndexError("profile_l2_error: component must be 0 or 1");
  if (intervals < 1) throw ConfigError("profile_l2_error: need at least one interval");
  // 3-point Gauss-Legendre on each piece
  constexpr std::array<double, 3> nodes{-0.7745966692414834, 0.0, 0.7745966692414834};
  constexpr std::array<double, 3> weights{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double dy = height / intervals;
  double err = 0.0, ref = 0.0;
  for (int k = 0; k < intervals; ++k) {
    const double mid = (k + 0.5) * dy;
    for (int q = 0; q < 3; ++q) {
      const double y = mid + 0.5 * dy * nodes[q];
      const Point u = evaluate_velocity(mesh, velocity, {x0, y});
      const double uh = component == 0 ? u.x : u.y;
      const double ue = exact(y);
      const double w = 0.5 * dy * weights[q];
      err += w * (uh - ue) * (uh - ue);
      ref += w * ue * ue;
    }
  }
  ProfileError out;
  out.absolute = std::sqrt(err);
  out.relative = ref > 0.0 ? out.absolute / std::sqrt(ref) : out.absolute;
  return out;
}

}  // namespace dflow
