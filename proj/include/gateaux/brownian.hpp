#pragma once

/// n-dimensional Brownian motion from the origin: first passage through the
/// sphere of radius sqrt(n) and the law of the exit point; and Wiener paths
/// sampled from the Haar/Schauder orthogonal series.

#include "gateaux/errors.hpp"
#include "gateaux/parallel.hpp"
#include "gateaux/rng.hpp"
#include "gateaux/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace gateaux {

/// How a replication is simulated.
///  - FullCoordinates: all n coordinates, each with N(0, dt) increments.
///  - RadialReduction: only X_1 and |(X_2..X_n)|. By rotational invariance,
///    |Y + dW|^2 = (|Y| + sqrt(dt) Z)^2 + dt chi2_{n-2} for a fresh normal Z,
///    so the pair (X_1, |Y|) follows exactly the law of the full discrete
///    chain at O(1) cost per step.
///  - Auto: FullCoordinates for n <= 3, RadialReduction above.
enum class PassageMethod { Auto, FullCoordinates, RadialReduction };

inline const char* to_string(PassageMethod m) noexcept
{
  switch (m) {
  case PassageMethod::FullCoordinates: return "full";
  case PassageMethod::RadialReduction: return "radial";
  default: return "auto";
  }
}

struct BrownianConfig {
  std::size_t n = 1;
  double dt = 1e-3;
  double horizon = 5.0;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;
  PassageMethod method = PassageMethod::Auto;

  void validate() const
  {
    if (n == 0) {
      throw DomainError("BrownianConfig: n must be at least 1");
    }
    if (!(dt > 0.0)) {
      throw DomainError("BrownianConfig: dt must be positive");
    }
    if (!(horizon >= dt)) {
      throw DomainError("BrownianConfig: horizon must be at least dt");
    }
  }
};

struct PassageStats {
  std::size_t n = 0;
  double radius = 0.0;
  std::uint64_t replications = 0;
  std::uint64_t censored = 0;
  double mean_T = 0.0;
  double var_T = 0.0;
  /// Passage times of the uncensored replications, in replication order.
  std::vector<double> passage_times;
  /// First coordinate of each exit point, after projection onto the sphere.
  std::vector<double> exit_first_coordinates;
  /// Norm of each projected exit point.
  std::vector<double> exit_norms;
};

namespace detail {

struct PassageSample {
  bool censored = true;
  double time = 0.0;
  double exit_first = 0.0;
  double exit_norm = 0.0;
};

/// Crossing fraction from the linear interpolation of rho^2.
inline double crossing_fraction(double rho2_old, double rho2_new, double target2) noexcept
{
  const double denom = rho2_new - rho2_old;
  return denom > 0.0 ? std::clamp((target2 - rho2_old) / denom, 0.0, 1.0) : 1.0;
}

inline PassageSample passage_full(std::size_t n, double dt, std::uint64_t max_steps, double radius,
                                  Stream& first, Stream& rest)
{
  const double sd = std::sqrt(dt);
  const double target2 = radius * radius;
  std::vector<double> x(n, 0.0), prev(n, 0.0);
  double rho2 = 0.0;
  for (std::uint64_t step = 0; step < max_steps; ++step) {
    prev = x;
    x[0] += sd * first.gaussian();
    for (std::size_t i = 1; i < n; ++i) {
      x[i] += sd * rest.gaussian();
    }
    double rho2_new = 0.0;
    for (const double v : x) {
      rho2_new += v * v;
    }
    if (rho2_new >= target2) {
      const double theta = crossing_fraction(rho2, rho2_new, target2);
      double norm2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = prev[i] + theta * (x[i] - prev[i]);
        norm2 += x[i] * x[i];
      }
      double projected2 = radius * radius;
      if (n == 1) {
        x[0] = std::copysign(radius, x[0]);
      } else {
        const double scale = radius / std::sqrt(norm2);
        projected2 = 0.0;
        for (auto& v : x) {
          v *= scale;
          projected2 += v * v;
        }
      }
      return {false, (static_cast<double>(step) + theta) * dt, x[0], std::sqrt(projected2)};
    }
    rho2 = rho2_new;
  }
  return {};
}

inline PassageSample passage_radial(std::size_t n, double dt, std::uint64_t max_steps, double radius,
                                    Stream& first, Stream& rest)
{
  const double sd = std::sqrt(dt);
  const double target2 = radius * radius;
  const double extra_dof = n >= 2 ? static_cast<double>(n - 2) : 0.0;
  double x1 = 0.0, s = 0.0; // s = |(X_2, ..., X_n)|
  for (std::uint64_t step = 0; step < max_steps; ++step) {
    const double x1_new = x1 + sd * first.gaussian();
    double s_new = 0.0, along = 0.0;
    if (n >= 2) {
      along = s + sd * rest.gaussian(); // component of Y_new along Y_old
      s_new = std::sqrt(along * along + dt * rest.chi_square(extra_dof));
    }
    const double rho2_old = x1 * x1 + s * s;
    const double rho2_new = x1_new * x1_new + s_new * s_new;
    if (rho2_new >= target2) {
      const double theta = crossing_fraction(rho2_old, rho2_new, target2);
      const double xe = x1 + theta * (x1_new - x1);
      // |Y_old + theta (Y_new - Y_old)|^2 with Y_old . Y_new = s * along.
      const double ye2 = std::max(0.0, (1.0 - theta) * (1.0 - theta) * s * s +
                                            2.0 * theta * (1.0 - theta) * s * along + theta * theta * s_new * s_new);
      const double norm = std::sqrt(xe * xe + ye2);
      const double scale = radius / norm;
      return {false, (static_cast<double>(step) + theta) * dt, xe * scale, norm * scale};
    }
    x1 = x1_new;
    s = s_new;
  }
  return {};
}

} // namespace detail

/// Replicates the first passage of an n-dimensional Brownian motion from 0
/// through the sphere of the given radius. Replication r draws X_1 from
/// sub-stream 2r and the remaining coordinates from sub-stream 2r + 1, so
/// runs with different n or method share the X_1 noise. Paths still inside at
/// `horizon` are censored: counted, and excluded from the moments.
inline PassageStats first_passage_stats(const BrownianConfig& config, double radius,
                                        std::uint64_t replications)
{
  config.validate();
  if (!(radius > 0.0)) {
    throw DomainError("first_passage_stats: radius must be positive");
  }
  if (replications < 2) {
    throw DomainError("first_passage_stats: need at least 2 replications");
  }
  const PassageMethod method = config.method != PassageMethod::Auto ? config.method
                               : config.n <= 3                      ? PassageMethod::FullCoordinates
                                                                    : PassageMethod::RadialReduction;
  const auto max_steps = static_cast<std::uint64_t>(std::ceil(config.horizon / config.dt - 1e-9));
  const std::uint64_t key = SeedPath(config.seed).key();

  constexpr std::uint64_t kBlock = 256;
  const std::uint64_t blocks = (replications + kBlock - 1) / kBlock;
  std::vector<detail::PassageSample> samples(replications);
  for_each_block(blocks, config.threads, [&](std::uint64_t b) {
    const std::uint64_t end = std::min(replications, (b + 1) * kBlock);
    for (std::uint64_t r = b * kBlock; r < end; ++r) {
      Stream first = derive_stream(key, 2 * r);
      Stream rest = derive_stream(key, 2 * r + 1);
      samples[r] = method == PassageMethod::FullCoordinates
                       ? detail::passage_full(config.n, config.dt, max_steps, radius, first, rest)
                       : detail::passage_radial(config.n, config.dt, max_steps, radius, first, rest);
    }
  });

  PassageStats stats;
  stats.n = config.n;
  stats.radius = radius;
  stats.replications = replications;
  RunningMoments moments;
  for (const auto& s : samples) {
    if (s.censored) {
      ++stats.censored;
      continue;
    }
    moments.push(s.time);
    stats.passage_times.push_back(s.time);
    stats.exit_first_coordinates.push_back(s.exit_first);
    stats.exit_norms.push_back(s.exit_norm);
  }
  stats.mean_T = moments.mean();
  stats.var_T = moments.variance();
  return stats;
}

inline constexpr std::size_t kMinExitSamples = 100;

/// KS distance between the standardized first exit coordinate x_1 sqrt(n)/r
/// and N(0, 1). For n = 1 the law is two-point at +-1 and the distance is
/// about Phi(1) - 1/2 = 0.34.
inline double exit_marginal_ks(const PassageStats& stats)
{
  if (stats.exit_first_coordinates.size() < kMinExitSamples) {
    throw DomainError("exit_marginal_ks: need at least " + std::to_string(kMinExitSamples) +
                      " uncensored exit points, have " + std::to_string(stats.exit_first_coordinates.size()));
  }
  const double scale = std::sqrt(static_cast<double>(stats.n)) / stats.radius;
  std::vector<double> z(stats.exit_first_coordinates);
  for (auto& v : z) {
    v *= scale;
  }
  return ks_distance(z, normal_cdf);
}

/// Whether a Gaussian exit marginal is expected at all (false for n = 1).
inline bool exit_marginal_is_continuous(std::size_t n) noexcept { return n >= 2; }

/// Value at t of the integrated basis function of `mode` (1-based) in the
/// Haar system: mode 1 is phi = 1, giving t; mode 2^j + k + 1 (0 <= k < 2^j)
/// is the Schauder tent over [k 2^-j, (k+1) 2^-j] with peak 2^(-j/2 - 1).
inline double schauder(std::size_t mode, double t)
{
  if (mode == 0) {
    throw DomainError("schauder: modes are 1-based");
  }
  if (mode == 1) {
    return t;
  }
  std::size_t j = 0;
  while ((std::size_t{2} << j) < mode) {
    ++j;
  }
  const double width = std::ldexp(1.0, -static_cast<int>(j));
  const auto k = static_cast<double>(mode - 1 - (std::size_t{1} << j));
  const double left = k * width;
  const double u = (t - left) / width;
  if (u <= 0.0 || u >= 1.0) {
    return 0.0;
  }
  const double peak = std::ldexp(1.0, -static_cast<int>(j)) * std::pow(2.0, 0.5 * static_cast<double>(j)) * 0.5;
  return peak * (u < 0.5 ? 2.0 * u : 2.0 * (1.0 - u));
}

/// W(t) = sum_{k=1}^{modes} xi_k int_0^t phi_k on the grid t_i = i/(grid-1).
inline std::vector<double> sample_wiener_path(std::size_t modes, std::size_t grid, Stream& stream)
{
  if (modes == 0) {
    throw DomainError("sample_wiener_path: modes must be at least 1");
  }
  if (grid < 2) {
    throw DomainError("sample_wiener_path: grid must have at least 2 points");
  }
  std::vector<double> path(grid, 0.0);
  const double h = 1.0 / static_cast<double>(grid - 1);
  const double xi1 = stream.gaussian();
  for (std::size_t i = 0; i < grid; ++i) {
    path[i] = xi1 * static_cast<double>(i) * h;
  }
  for (std::size_t mode = 2; mode <= modes; ++mode) {
    const double xi = stream.gaussian();
    std::size_t j = 0;
    while ((std::size_t{2} << j) < mode) {
      ++j;
    }
    const double width = std::ldexp(1.0, -static_cast<int>(j));
    const double left = static_cast<double>(mode - 1 - (std::size_t{1} << j)) * width;
    const auto first = static_cast<std::size_t>(std::floor(left / h));
    const auto last = std::min(grid - 1, static_cast<std::size_t>(std::ceil((left + width) / h)));
    for (std::size_t i = first; i <= last; ++i) {
      path[i] += xi * schauder(mode, static_cast<double>(i) * h);
    }
  }
  return path;
}

inline std::vector<double> sample_wiener_path(std::size_t modes, std::size_t grid, std::uint64_t seed)
{
  Stream stream = derive_stream(SeedPath(seed));
  return sample_wiener_path(modes, grid, stream);
}

/// Sum of squared increments along the grid.
inline double quadratic_variation(std::span<const double> path) noexcept
{
  double qv = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double d = path[i] - path[i - 1];
    qv += d * d;
  }
  return qv;
}

} // namespace gateaux
