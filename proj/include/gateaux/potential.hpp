#pragma once

/// Newtonian potentials on a sphere in R^3 and Green's representation
///
///   U(P) = -1/(4 pi) iiint_R lap U / r dV
///          + 1/(4 pi) iint_S dU/dnu / r dS
///          - 1/(4 pi) iint_S U d/dnu (1/r) dS,
///
/// with r = |P - Q| and nu the outward normal at Q.

#include "gateaux/errors.hpp"
#include "gateaux/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace gateaux {

using Point3 = std::array<double, 3>;

inline double dot(const Point3& a, const Point3& b) noexcept
{
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

inline double norm(const Point3& a) noexcept { return std::sqrt(dot(a, a)); }

struct SurfaceNode {
  Point3 point{};
  Point3 normal{};
  double weight = 0.0;
};

inline constexpr std::size_t kDefaultSurfaceOrder = 32;
inline constexpr std::size_t kDefaultVolumeShells = 32;

/// Sphere of radius a centred at the origin with a product surface rule:
/// Gauss-Legendre in cos(polar angle) times the trapezoid rule in azimuth.
class BoundarySpec {
public:
  /// `order` polar nodes and 2 * order azimuthal nodes.
  static BoundarySpec sphere(double radius, std::size_t order = kDefaultSurfaceOrder)
  {
    if (!(radius > 0.0)) {
      throw DomainError("BoundarySpec: radius must be positive");
    }
    if (order < 1) {
      throw DomainError("BoundarySpec: order must be positive");
    }
    BoundarySpec out;
    out.radius_ = radius;
    out.order_ = order;
    const QuadratureRule polar = gauss_legendre(order);
    const std::size_t azimuths = 2 * order;
    const double dphi = 2.0 * std::numbers::pi / static_cast<double>(azimuths);
    out.nodes_.reserve(order * azimuths);
    for (std::size_t i = 0; i < order; ++i) {
      const double mu = polar.nodes[i];
      const double sin_theta = std::sqrt(std::max(0.0, 1.0 - mu * mu));
      for (std::size_t k = 0; k < azimuths; ++k) {
        const double phi = (static_cast<double>(k) + 0.5) * dphi;
        const Point3 normal{sin_theta * std::cos(phi), sin_theta * std::sin(phi), mu};
        out.nodes_.push_back(
            {{radius * normal[0], radius * normal[1], radius * normal[2]}, normal, radius * radius * polar.weights[i] * dphi});
      }
    }
    return out;
  }

  double radius() const noexcept { return radius_; }
  std::size_t order() const noexcept { return order_; }
  const std::vector<SurfaceNode>& nodes() const noexcept { return nodes_; }

private:
  double radius_ = 1.0;
  std::size_t order_ = 0;
  std::vector<SurfaceNode> nodes_;
};

using ScalarField = std::function<double(const Point3&)>;

struct FieldSample {
  ScalarField value;
  ScalarField normal_derivative;
  /// Optional; when empty the field is taken to be harmonic.
  ScalarField laplacian;
};

namespace detail {

inline void require_off_boundary(const BoundarySpec& boundary, const Point3& p, bool inside, const char* who)
{
  const double r = norm(p);
  const double a = boundary.radius();
  if (std::abs(r - a) <= 1e-12 * a) {
    throw DomainError(std::string(who) + ": evaluation point lies on the boundary");
  }
  if (inside != (r < a)) {
    throw DomainError(std::string(who) + (inside ? ": point is not inside the sphere" : ": point is not outside the sphere"));
  }
}

} // namespace detail

/// (1/4 pi) iint density(Q) / |P - Q| dS.
inline double single_layer(const BoundarySpec& boundary, const ScalarField& density, const Point3& p, bool inside)
{
  detail::require_off_boundary(boundary, p, inside, "single_layer");
  double sum = 0.0;
  for (const auto& q : boundary.nodes()) {
    const Point3 d{p[0] - q.point[0], p[1] - q.point[1], p[2] - q.point[2]};
    sum += q.weight * density(q.point) / norm(d);
  }
  return sum / (4.0 * std::numbers::pi);
}

/// -(1/4 pi) iint moment(Q) d/dnu_Q (1/|P - Q|) dS.
inline double double_layer(const BoundarySpec& boundary, const ScalarField& moment, const Point3& p, bool inside)
{
  detail::require_off_boundary(boundary, p, inside, "double_layer");
  double sum = 0.0;
  for (const auto& q : boundary.nodes()) {
    const Point3 d{p[0] - q.point[0], p[1] - q.point[1], p[2] - q.point[2]};
    const double r = norm(d);
    // grad_Q (1/|P - Q|) = (P - Q)/r^3
    sum += q.weight * moment(q.point) * dot(q.normal, d) / (r * r * r);
  }
  return -sum / (4.0 * std::numbers::pi);
}

/// -(1/4 pi) iiint_ball source(Q) / |P - Q| dV, integrated along rays from
/// P (spherical coordinates centred at P cancel the 1/r singularity):
/// directions from the boundary's angular rule, `shells` Gauss-Legendre nodes
/// along each ray.
inline double volume_potential(const BoundarySpec& boundary, const ScalarField& source, const Point3& p,
                               std::size_t shells = kDefaultVolumeShells)
{
  detail::require_off_boundary(boundary, p, true, "volume_potential");
  const double a = boundary.radius();
  const QuadratureRule radial = gauss_legendre(shells, 0.0, 1.0);
  const double p2 = dot(p, p);
  double sum = 0.0;
  for (const auto& node : boundary.nodes()) {
    const Point3& w = node.normal;
    const double solid_angle = node.weight / (a * a);
    const double pw = dot(p, w);
    const double reach = -pw + std::sqrt(pw * pw + a * a - p2);
    double ray = 0.0;
    for (std::size_t k = 0; k < radial.size(); ++k) {
      const double s = reach * radial.nodes[k];
      const Point3 q{p[0] + s * w[0], p[1] + s * w[1], p[2] + s * w[2]};
      ray += radial.weights[k] * source(q) * s;
    }
    sum += solid_angle * ray * reach;
  }
  return -sum / (4.0 * std::numbers::pi);
}

struct GreenTerms {
  double volume = 0.0;
  double single = 0.0;
  double dipole = 0.0;
  double value = 0.0;
  /// |P| > 0.9 a: the near-singular kernel degrades the surface rule.
  bool near_boundary = false;
};

inline GreenTerms green_terms(const BoundarySpec& boundary, const FieldSample& field, const Point3& p,
                              std::size_t shells = kDefaultVolumeShells)
{
  if (!field.value || !field.normal_derivative) {
    throw DomainError("green_reconstruct: field needs U and dU/dnu");
  }
  detail::require_off_boundary(boundary, p, true, "green_reconstruct");
  GreenTerms t;
  t.single = single_layer(boundary, field.normal_derivative, p, true);
  t.dipole = double_layer(boundary, field.value, p, true);
  if (field.laplacian) {
    t.volume = volume_potential(boundary, field.laplacian, p, shells);
  }
  t.value = t.volume + t.single + t.dipole;
  t.near_boundary = norm(p) > 0.9 * boundary.radius();
  return t;
}

/// U(P) recovered from boundary data (plus the volume term when the
/// laplacian is supplied).
inline double green_reconstruct(const BoundarySpec& boundary, const FieldSample& field, const Point3& p,
                                std::size_t shells = kDefaultVolumeShells)
{
  return green_terms(boundary, field, p, shells).value;
}

/// Polynomial test fields with exact normal derivatives on a centred sphere.
namespace fields {

struct NamedField {
  std::string name;
  FieldSample sample;
  bool harmonic = true;
};

/// dU/dnu = grad U . Q/|Q|.
inline ScalarField normal_derivative_of(std::function<Point3(const Point3&)> gradient)
{
  return [gradient = std::move(gradient)](const Point3& q) {
    const Point3 g = gradient(q);
    return dot(g, q) / norm(q);
  };
}

inline NamedField make(const std::string& name)
{
  auto build = [&](ScalarField u, std::function<Point3(const Point3&)> grad, ScalarField lap, bool harmonic) {
    return NamedField{name, FieldSample{std::move(u), normal_derivative_of(std::move(grad)), std::move(lap)}, harmonic};
  };
  using P = const Point3&;
  if (name == "one") {
    return build([](P) { return 1.0; }, [](P) { return Point3{0, 0, 0}; }, {}, true);
  }
  if (name == "x") {
    return build([](P q) { return q[0]; }, [](P) { return Point3{1, 0, 0}; }, {}, true);
  }
  if (name == "y") {
    return build([](P q) { return q[1]; }, [](P) { return Point3{0, 1, 0}; }, {}, true);
  }
  if (name == "z") {
    return build([](P q) { return q[2]; }, [](P) { return Point3{0, 0, 1}; }, {}, true);
  }
  if (name == "xy") {
    return build([](P q) { return q[0] * q[1]; }, [](P q) { return Point3{q[1], q[0], 0}; }, {}, true);
  }
  if (name == "x2-y2") {
    return build([](P q) { return q[0] * q[0] - q[1] * q[1]; }, [](P q) { return Point3{2 * q[0], -2 * q[1], 0}; },
                 {}, true);
  }
  if (name == "2z2-x2-y2") {
    return build([](P q) { return 2 * q[2] * q[2] - q[0] * q[0] - q[1] * q[1]; },
                 [](P q) { return Point3{-2 * q[0], -2 * q[1], 4 * q[2]}; }, {}, true);
  }
  if (name == "r2") {
    return build([](P q) { return dot(q, q); }, [](P q) { return Point3{2 * q[0], 2 * q[1], 2 * q[2]}; },
                 [](P) { return 6.0; }, false);
  }
  throw DomainError("unknown test field '" + name + "' (one, x, y, z, xy, x2-y2, 2z2-x2-y2, r2)");
}

inline const std::vector<std::string>& harmonic_names()
{
  static const std::vector<std::string> names{"one", "x", "y", "z", "xy", "x2-y2", "2z2-x2-y2"};
  return names;
}

} // namespace fields

} // namespace gateaux
