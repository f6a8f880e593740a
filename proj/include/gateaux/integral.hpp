#pragma once

/// Mean values of functionals over the n-th sections of the L2 sphere, their
/// Gaussian limits, convergence studies, and the field integral over
/// {0 <= f <= 1}.

#include "gateaux/errors.hpp"
#include "gateaux/functional.hpp"
#include "gateaux/parallel.hpp"
#include "gateaux/quadrature.hpp"
#include "gateaux/sphere.hpp"
#include "gateaux/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace gateaux {

inline constexpr std::size_t kDefaultLegendreOrder = 64;
inline constexpr std::size_t kDefaultHermiteOrder = 40;
/// Largest number of integrand evaluations a tensorized limit quadrature may use.
inline constexpr double kLimitNodeBudget = 5e7;
inline constexpr std::size_t kMaxLimitDimension = 4;

enum class MeanMethod { Quadrature, MonteCarlo };

inline const char* to_string(MeanMethod m) noexcept
{
  return m == MeanMethod::Quadrature ? "quadrature" : "monte-carlo";
}

struct MeanEstimate {
  double value = 0.0;
  double std_error = 0.0; // 0 for quadrature
  std::size_t n = 0;
  MeanMethod method = MeanMethod::Quadrature;
};

namespace detail {

inline const PointCylinder& require_single_point(const Functional& func, const char* who)
{
  const auto* c = func.as<PointCylinder>();
  if (c == nullptr || c->alphas.size() != 1) {
    throw DomainError(std::string(who) + ": needs a PointCylinder with p = 1");
  }
  return *c;
}

} // namespace detail

/// Section mean of U(x) = g(x(a)) as the one-dimensional integral
///   int g(R sqrt(n) sin t) cos^m t dt / int cos^m t dt,  t in [-pi/2, pi/2],
/// with m = n for BallSlice and m = n - 2 for SurfaceMeasure.
///
/// cos^m t behaves like exp(-m t^2 / 2), so the integral is restricted to
/// |t| <= 14 / sqrt(m) (the weight there is below e^-98) and covered by panels
/// at most four standard deviations wide, each with an `order`-point
/// Gauss-Legendre rule.
inline MeanEstimate section_mean_quadrature(const Functional& func, const SphereSection& section,
                                            MarginalConvention convention,
                                            std::size_t order = kDefaultLegendreOrder)
{
  const auto& cyl = detail::require_single_point(func, "section_mean_quadrature");
  if (order < 2) {
    throw DomainError("section_mean_quadrature: order must be at least 2");
  }
  const std::size_t power = theta_weight_power(section.n(), convention);
  const double m = static_cast<double>(std::max<std::size_t>(power, 1));
  const double sigma = 1.0 / std::sqrt(m);
  const double half_width = std::min(std::numbers::pi / 2.0, 14.0 * sigma);
  const auto panels = static_cast<std::size_t>(std::ceil(2.0 * half_width / (4.0 * sigma)));
  const double panel_width = 2.0 * half_width / static_cast<double>(panels);
  const QuadratureRule ref = gauss_legendre(order);
  const double rho = section.euclidean_radius();

  CompensatedSum numerator, denominator;
  double v[1];
  for (std::size_t k = 0; k < panels; ++k) {
    const double a = -half_width + static_cast<double>(k) * panel_width;
    const double mid = a + 0.5 * panel_width;
    for (std::size_t q = 0; q < ref.size(); ++q) {
      const double t = mid + 0.5 * panel_width * ref.nodes[q];
      const double w = 0.5 * panel_width * ref.weights[q] * std::pow(std::cos(t), static_cast<double>(power));
      v[0] = rho * std::sin(t);
      const double g = detail::checked(cyl.g(std::span<const double>(v, 1)), "PointCylinder g");
      numerator.add(w * g);
      denominator.add(w);
    }
  }
  return MeanEstimate{numerator.value() / denominator.value(), 0.0, section.n(), MeanMethod::Quadrature};
}

/// Average of U over uniform points of the section (surface measure on the
/// Euclidean sphere of radius R sqrt(n)). Sample i uses sub-stream i of
/// `seed`, so the result does not depend on `threads`.
inline MeanEstimate section_mean_monte_carlo(const Functional& func, const SphereSection& section,
                                             std::uint64_t samples, const SeedPath& seed,
                                             unsigned threads = 1)
{
  if (samples < 2) {
    throw DomainError("section_mean_monte_carlo: need at least 2 samples");
  }
  const SectionEvaluator u(func, section.n());
  const double rho = section.euclidean_radius();
  const std::size_t n = section.n();
  const auto result = monte_carlo_mean(
      samples, seed,
      [&](Stream& stream, std::uint64_t) {
        thread_local std::vector<double> x;
        x.resize(n);
        sample_sphere(x, rho, stream);
        return u(x);
      },
      threads);
  return MeanEstimate{result.mean, result.std_error, n, MeanMethod::MonteCarlo};
}

inline MeanEstimate section_mean_monte_carlo(const Functional& func, const SphereSection& section,
                                             std::uint64_t samples, std::uint64_t seed, unsigned threads = 1)
{
  return section_mean_monte_carlo(func, section, samples, SeedPath(seed), threads);
}

namespace detail {

inline void check_budget(std::size_t dim, double nodes_per_axis)
{
  if (dim > kMaxLimitDimension) {
    throw BudgetError("gaussian_limit_mean: " + std::to_string(dim) + " Gaussian dimensions exceed the " +
                      std::to_string(kMaxLimitDimension) +
                      "-dimensional quadrature budget; use section_mean_monte_carlo at large n instead");
  }
  if (std::pow(nodes_per_axis, static_cast<double>(dim)) > kLimitNodeBudget) {
    throw BudgetError("gaussian_limit_mean: tensor rule needs more than " +
                      std::to_string(static_cast<long long>(kLimitNodeBudget)) +
                      " evaluations; lower the orders or use section_mean_monte_carlo");
  }
}

/// (2 pi)^(-p/2) int_{[0,1]^p} int_{R^p} f(R z, a) exp(-|z|^2/2) dz da.
template <typename F>
double gaussian_alpha_tensor(std::size_t p, double radius, const QuadratureRule& hermite,
                             const QuadratureRule& legendre01, F&& f)
{
  std::vector<double> values(p), alphas(p);
  CompensatedSum sum;
  for_each_tuple(legendre01.size(), p, [&](std::span<const std::size_t> ai) {
    double wa = 1.0;
    for (std::size_t k = 0; k < p; ++k) {
      alphas[k] = legendre01.nodes[ai[k]];
      wa *= legendre01.weights[ai[k]];
    }
    for_each_tuple(hermite.size(), p, [&](std::span<const std::size_t> zi) {
      double w = wa;
      for (std::size_t k = 0; k < p; ++k) {
        values[k] = radius * hermite.nodes[zi[k]];
        w *= hermite.weights[zi[k]];
      }
      sum.add(w * f(values, alphas));
    });
  });
  return sum.value();
}

} // namespace detail

/// The limit of the section means as n -> infinity: every point value x(a)
/// becomes R Z with Z standard normal, independent across distinct points.
///  - PointCylinder: E[g(R Z_{a_1}, ..., R Z_{a_p})]; equal alphas share a
///    variable.
///  - IntegralCylinder / VolterraSeries: the alpha integrals by Gauss-Legendre
///    outside a tensor Gauss-Hermite rule for the Gaussian expectation.
inline double gaussian_limit_mean(const Functional& func, double radius,
                                  std::size_t hermite_order = kDefaultHermiteOrder,
                                  std::size_t alpha_quadrature_order = kDefaultLegendreOrder)
{
  if (!(radius > 0.0)) {
    throw DomainError("gaussian_limit_mean: R must be positive");
  }
  if (hermite_order < 2 || alpha_quadrature_order < 2) {
    throw DomainError("gaussian_limit_mean: orders must be at least 2");
  }
  const QuadratureRule hermite = gauss_hermite_normal(hermite_order);

  if (const auto* c = func.as<PointCylinder>()) {
    std::vector<double> distinct;
    std::vector<std::size_t> variable(c->alphas.size());
    for (std::size_t i = 0; i < c->alphas.size(); ++i) {
      const auto it = std::find(distinct.begin(), distinct.end(), c->alphas[i]);
      variable[i] = static_cast<std::size_t>(it - distinct.begin());
      if (it == distinct.end()) {
        distinct.push_back(c->alphas[i]);
      }
    }
    const std::size_t dim = distinct.size();
    detail::check_budget(dim, static_cast<double>(hermite_order));
    std::vector<double> args(c->alphas.size());
    CompensatedSum sum;
    detail::for_each_tuple(hermite.size(), dim, [&](std::span<const std::size_t> zi) {
      double w = 1.0;
      for (std::size_t k = 0; k < dim; ++k) {
        w *= hermite.weights[zi[k]];
      }
      for (std::size_t i = 0; i < args.size(); ++i) {
        args[i] = radius * hermite.nodes[zi[variable[i]]];
      }
      sum.add(w * detail::checked(c->g(args), "PointCylinder g"));
    });
    return sum.value();
  }

  const QuadratureRule legendre01 = gauss_legendre(alpha_quadrature_order, 0.0, 1.0);
  const double per_axis = static_cast<double>(hermite_order * alpha_quadrature_order);

  if (const auto* c = func.as<IntegralCylinder>()) {
    detail::check_budget(c->p, per_axis);
    return detail::gaussian_alpha_tensor(c->p, radius, hermite, legendre01,
                                         [&](std::span<const double> v, std::span<const double> a) {
                                           return detail::checked(c->f(v, a), "IntegralCylinder f");
                                         });
  }

  const auto& series = *func.as<VolterraSeries>();
  double total = 0.0;
  for (std::size_t j = 0; j < series.kernels.size(); ++j) {
    const auto& kernel = series.kernels[j];
    if (!kernel) {
      continue;
    }
    const std::size_t order = j + 1;
    detail::check_budget(order, per_axis);
    total += detail::gaussian_alpha_tensor(order, radius, hermite, legendre01,
                                           [&](std::span<const double> v, std::span<const double> a) {
                                             double product = detail::checked(kernel(a), "Volterra kernel");
                                             for (const double x : v) {
                                               product *= x;
                                             }
                                             return product;
                                           });
  }
  return total;
}

struct ConvergenceRow {
  std::size_t n = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double abs_error = 0.0;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double limit = 0.0;
  /// Absent when the errors are all at quadrature tolerance (the sequence is
  /// exact) or there are fewer than three positive errors.
  std::optional<LogLogFit> fit;
  std::string fit_note;
};

struct ConvergenceOptions {
  MeanMethod method = MeanMethod::Quadrature;
  MarginalConvention convention = MarginalConvention::SurfaceMeasure;
  std::size_t order = kDefaultLegendreOrder;
  std::size_t hermite_order = kDefaultHermiteOrder;
  std::uint64_t samples = 100000;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 1;
  /// Errors at or below this (relative to max(1, |limit|)) count as exact.
  double tolerance = 1e-9;
};

/// Section means along n_list against the independently computed Gaussian
/// limit, with a least-squares fit of log |error| against log n.
inline ConvergenceReport convergence_report(const Functional& func, double radius,
                                            std::span<const std::size_t> n_list,
                                            const ConvergenceOptions& options = {})
{
  if (n_list.empty()) {
    throw DomainError("convergence_report: n_list is empty");
  }
  for (std::size_t i = 1; i < n_list.size(); ++i) {
    if (n_list[i] <= n_list[i - 1]) {
      throw DomainError("convergence_report: n_list must be strictly increasing");
    }
  }
  ConvergenceReport report;
  report.limit = gaussian_limit_mean(func, radius, options.hermite_order, options.order);
  const double scale = std::max(1.0, std::abs(report.limit));
  std::vector<FitPoint> points;
  bool all_exact = true;
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    const SphereSection section(n_list[k], radius);
    const MeanEstimate est =
        options.method == MeanMethod::Quadrature
            ? section_mean_quadrature(func, section, options.convention, options.order)
            : section_mean_monte_carlo(func, section, options.samples, SeedPath(options.seed, {k}),
                                       options.threads);
    ConvergenceRow row{section.n(), est.value, est.std_error, std::abs(est.value - report.limit)};
    if (row.abs_error > options.tolerance * scale) {
      all_exact = false;
    }
    if (row.abs_error > 0.0) {
      points.push_back({static_cast<double>(row.n), row.abs_error});
    }
    report.rows.push_back(row);
  }
  if (all_exact) {
    report.fit_note = "degenerate: every section mean equals the limit to tolerance";
  } else if (points.size() < 3) {
    report.fit_note = "too few nonzero errors to fit";
  } else {
    report.fit = loglog_fit(points);
  }
  return report;
}

/// The field integral I_n: the mean of U over step functions whose n
/// cell values are independent uniforms on [0, 1].
///
/// For a PointCylinder with n <= 4 the mean is computed by tensor
/// Gauss-Legendre quadrature over the cells the functional actually reads;
/// otherwise by Monte Carlo.
inline MeanEstimate field_integral(const Functional& func, std::size_t n, std::uint64_t samples,
                                   const SeedPath& seed, unsigned threads = 1)
{
  if (n == 0) {
    throw DomainError("field_integral: n must be at least 1");
  }
  if (const auto* c = func.as<PointCylinder>(); c != nullptr && n <= 4) {
    constexpr std::size_t kFieldOrder = 32;
    std::vector<std::size_t> cells;
    std::vector<std::size_t> slot(c->alphas.size());
    for (std::size_t i = 0; i < c->alphas.size(); ++i) {
      const std::size_t cell = StepFunction::cell_of(c->alphas[i], n);
      const auto it = std::find(cells.begin(), cells.end(), cell);
      slot[i] = static_cast<std::size_t>(it - cells.begin());
      if (it == cells.end()) {
        cells.push_back(cell);
      }
    }
    const QuadratureRule rule = gauss_legendre(kFieldOrder, 0.0, 1.0);
    std::vector<double> args(c->alphas.size());
    CompensatedSum sum;
    detail::for_each_tuple(rule.size(), cells.size(), [&](std::span<const std::size_t> at) {
      double w = 1.0;
      for (const auto q : at) {
        w *= rule.weights[q];
      }
      for (std::size_t i = 0; i < args.size(); ++i) {
        args[i] = rule.nodes[at[slot[i]]];
      }
      sum.add(w * detail::checked(c->g(args), "PointCylinder g"));
    });
    return MeanEstimate{sum.value(), 0.0, n, MeanMethod::Quadrature};
  }
  if (samples < 2) {
    throw DomainError("field_integral: need at least 2 samples");
  }
  const SectionEvaluator u(func, n);
  const auto result = monte_carlo_mean(
      samples, seed,
      [&](Stream& stream, std::uint64_t) {
        thread_local std::vector<double> x;
        x.resize(n);
        for (auto& v : x) {
          v = stream.uniform();
        }
        return u(x);
      },
      threads);
  return MeanEstimate{result.mean, result.std_error, n, MeanMethod::MonteCarlo};
}

inline MeanEstimate field_integral(const Functional& func, std::size_t n, std::uint64_t samples,
                                   std::uint64_t seed, unsigned threads = 1)
{
  return field_integral(func, n, samples, SeedPath(seed), threads);
}

} // namespace gateaux
