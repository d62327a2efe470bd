#ifndef DFLOW_ORACLE_HPP
#define DFLOW_ORACLE_HPP

#include <functional>
#include <span>

#include "dflow/mesh.hpp"
#include "dflow/sparse.hpp"

namespace dflow {

/// Plane channel 0 <= y <= H. All quantities in one consistent unit system
/// (the library uses cm, cm^2/s and s internally). Flow rates are per unit
/// depth.
struct ChannelFlowSpec {
  double height = 0.0;
  double viscosity = 0.0;
  double amplitude = 0.0;  ///< Q0 of Q(t) = Q0 sin(omega t)
  double omega = 0.0;
  double flow_rate = 0.0;  ///< steady Q

  void validate() const;
};

/// u(y) = 6 Q / H^3 * y (H - y)
double poiseuille_velocity(const ChannelFlowSpec& spec, double y);

/// Exact periodic solution of u_t = g(t) + nu u_yy with u(0) = u(H) = 0 and
/// int_0^H u dy = Q0 sin(omega t). Throws ConfigError for omega = 0.
double womersley_channel_velocity(const ChannelFlowSpec& spec, double y, double t);

/// The uniform forcing g(t) that drives the periodic solution above.
double womersley_forcing(const ChannelFlowSpec& spec, double t);

/// Row `section` of Phi times U.
double compute_flow_rate(const SparseMatrix& phi, std::span<const double> u, Index section);

using ScalarField = std::function<double(Point)>;
using VectorField = std::function<Point(Point)>;

/// || u_h - u ||_{L2(Omega)} for a nodal P1 scalar field, 6-point degree-4
/// quadrature on every triangle.
double l2_error(const Mesh& mesh, std::span<const double> nodal, const ScalarField& exact);

/// Same for a P1 velocity field stored as (ux, uy) per vertex.
double l2_error(const Mesh& mesh, std::span<const double> velocity, const VectorField& exact);

/// || u ||_{L2(Omega)} of an analytic field (same quadrature).
double l2_norm(const Mesh& mesh, const VectorField& exact);

/// Evaluates a P1 velocity field at a point; throws IndexError outside the mesh.
Point evaluate_velocity(const Mesh& mesh, std::span<const double> velocity, Point p);

struct ProfileError {
  double absolute = 0.0;
  double relative = 0.0;  ///< absolute / ||exact||
};

/// L2 error of the velocity component `component` along the vertical line
/// x = x0, from y = 0 to y = height, against exact(y). Composite Gauss
/// quadrature over `intervals` pieces.
ProfileError profile_l2_error(const Mesh& mesh, std::span<const double> velocity, double x0, double height,
                              const std::function<double(double)>& exact, int component = 0,
                              int intervals = 200);

}  // namespace dflow

#endif  // DFLOW_ORACLE_HPP
