#pragma once

/// Geometry of high-dimensional spheres: Wallis integrals, ball volumes,
/// coordinate marginals and uniform surface sampling.

#include "gateaux/errors.hpp"
#include "gateaux/rng.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace gateaux {

/// The n-th section of the L2 sphere of radius R: step functions with n equal
/// cells and sum x_i^2 = n R^2, i.e. the Euclidean sphere of radius R sqrt(n).
class SphereSection {
public:
  SphereSection(std::size_t n, double radius) : n_(n), radius_(radius)
  {
    if (n == 0) {
      throw DomainError("SphereSection: n must be at least 1");
    }
    if (!(radius > 0.0) || !std::isfinite(radius)) {
      throw DomainError("SphereSection: R must be positive and finite");
    }
  }

  std::size_t n() const noexcept { return n_; }
  double radius() const noexcept { return radius_; }
  double euclidean_radius() const noexcept { return radius_ * std::sqrt(static_cast<double>(n_)); }

private:
  std::size_t n_;
  double radius_;
};

/// Which one-dimensional law a fixed coordinate of the section follows.
///  - BallSlice: the hyperplane slice is weighted as an (n-1)-ball volume,
///    density proportional to (1 - z^2/(nR^2))^((n-1)/2).
///  - SurfaceMeasure: exact marginal of uniform surface measure,
///    proportional to (1 - z^2/(nR^2))^((n-3)/2); needs n >= 3.
enum class MarginalConvention { BallSlice, SurfaceMeasure };

inline const char* to_string(MarginalConvention c) noexcept
{
  return c == MarginalConvention::BallSlice ? "ball-slice" : "surface";
}

/// W_n = integral of cos^n over [0, pi/2], by W_n = ((n-1)/n) W_{n-2}.
inline double wallis(std::size_t n) noexcept
{
  double w = (n % 2 == 0) ? std::numbers::pi / 2.0 : 1.0;
  for (std::size_t k = (n % 2 == 0) ? 2 : 3; k <= n; k += 2) {
    w *= static_cast<double>(k - 1) / static_cast<double>(k);
  }
  return w;
}

/// Volume of the unit ball in R^n via V_n = 2 V_{n-1} W_n, V_1 = 2.
inline double ball_volume(std::size_t n)
{
  if (n == 0) {
    throw DomainError("ball_volume: n must be at least 1");
  }
  double volume = 2.0;
  double w_even = std::numbers::pi / 2.0; // W_0
  double w_odd = 1.0;                     // W_1
  for (std::size_t k = 2; k <= n; ++k) {
    double& w = (k % 2 == 0) ? w_even : w_odd;
    w *= static_cast<double>(k - 1) / static_cast<double>(k);
    volume *= 2.0 * w;
  }
  return volume;
}

/// Exponent m such that the section mean of g(x(alpha)) is
///   int g(R sqrt(n) sin t) cos^m t dt / int cos^m t dt   over [-pi/2, pi/2].
inline std::size_t theta_weight_power(std::size_t n, MarginalConvention convention)
{
  if (convention == MarginalConvention::BallSlice) {
    return n;
  }
  if (n < 3) {
    throw DomainError("surface-measure marginal needs n >= 3 (got n = " + std::to_string(n) + ")");
  }
  return n - 2;
}

/// Fills `out` with a point uniformly distributed on the sphere of radius r:
/// a standard Gaussian vector, normalized. A zero vector is redrawn.
inline void sample_sphere(std::span<double> out, double r, Stream& stream)
{
  if (out.empty()) {
    throw DomainError("sample_sphere: dimension must be at least 1");
  }
  if (!(r > 0.0)) {
    throw DomainError("sample_sphere: radius must be positive");
  }
  for (;;) {
    double norm2 = 0.0;
    for (auto& x : out) {
      x = stream.gaussian();
      norm2 += x * x;
    }
    if (out.size() == 1 && norm2 > 0.0) {
      out[0] = std::copysign(r, out[0]);
      return;
    }
    if (norm2 > 0.0) {
      const double scale = r / std::sqrt(norm2);
      for (auto& x : out) {
        x *= scale;
      }
      return;
    }
  }
}

inline std::vector<double> sample_sphere(std::size_t n, double r, Stream& stream)
{
  std::vector<double> out(n);
  sample_sphere(out, r, stream);
  return out;
}

inline std::vector<double> sample_sphere(std::size_t n, double r, std::uint64_t seed)
{
  Stream stream = derive_stream(SeedPath(seed));
  return sample_sphere(n, r, stream);
}

/// Density of one coordinate z of a point of the section, normalized on
/// [-R sqrt(n), R sqrt(n)]; zero outside the support.
inline double coordinate_marginal_density(const SphereSection& section, double z,
                                          MarginalConvention convention)
{
  const std::size_t power = theta_weight_power(section.n(), convention);
  const double rho = section.euclidean_radius();
  const double u = 1.0 - (z / rho) * (z / rho);
  if (!(u >= 0.0)) {
    return 0.0;
  }
  // int (1 - z^2/rho^2)^k dz over the support = 2 rho W_{2k+1}, 2k+1 = power.
  const double exponent = 0.5 * (static_cast<double>(power) - 1.0);
  return std::pow(u, exponent) / (2.0 * rho * wallis(power));
}

} // namespace gateaux
