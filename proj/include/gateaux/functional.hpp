#pragma once

/// Functionals on function space and their evaluation on step functions.
///
/// A StepFunction with n values stands for x(a) = x_i on [(i-1)/n, i/n) with
/// x(1) = x_n. Every functional here reduces, on a step function, to a finite
/// sum over cells; that sum is what `evaluate` computes.

#include "gateaux/errors.hpp"
#include "gateaux/quadrature.hpp"
#include "gateaux/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace gateaux {

class StepFunction {
public:
  explicit StepFunction(std::vector<double> values) : values_(std::move(values))
  {
    if (values_.empty()) {
      throw DomainError("StepFunction: needs at least one cell");
    }
  }

  /// Constant function c on n cells.
  static StepFunction constant(std::size_t n, double c) { return StepFunction(std::vector<double>(n, c)); }

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  /// Index of the half-open cell containing alpha; alpha = 1 maps to the last.
  static std::size_t cell_of(double alpha, std::size_t n)
  {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
      throw DomainError("cell_of: alpha outside [0, 1]");
    }
    const auto i = static_cast<std::size_t>(alpha * static_cast<double>(n));
    return std::min(i, n - 1);
  }

  double at(double alpha) const { return values_[cell_of(alpha, size())]; }

  /// integral of x^2 over [0, 1].
  double l2_norm_squared() const noexcept
  {
    double s = 0.0;
    for (const double v : values_) {
      s += v * v;
    }
    return s / static_cast<double>(values_.size());
  }

  double sup_norm() const noexcept
  {
    double m = 0.0;
    for (const double v : values_) {
      m = std::max(m, std::abs(v));
    }
    return m;
  }

  /// True when sum x_i^2 = n R^2 to `rel_tol`.
  bool on_section(const SphereSection& section, double rel_tol = 1e-9) const noexcept
  {
    if (section.n() != size()) {
      return false;
    }
    const double r2 = section.radius() * section.radius();
    return std::abs(l2_norm_squared() - r2) <= rel_tol * r2;
  }

  /// The same step function on a partition refined by `factor`.
  StepFunction refined(std::size_t factor) const
  {
    std::vector<double> out;
    out.reserve(values_.size() * factor);
    for (const double v : values_) {
      out.insert(out.end(), factor, v);
    }
    return StepFunction(std::move(out));
  }

  /// x + t h, cellwise.
  StepFunction axpy(double t, const StepFunction& h) const
  {
    if (h.size() != size()) {
      throw DomainError("StepFunction: partition sizes differ");
    }
    std::vector<double> out(values_);
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += t * h.values_[i];
    }
    return StepFunction(std::move(out));
  }

private:
  std::vector<double> values_;
};

/// U(x) = g(x(a_1), ..., x(a_p)).
struct PointCylinder {
  std::function<double(std::span<const double>)> g;
  std::vector<double> alphas;
};

/// U(x) = int_{[0,1]^p} f(x(a_1), ..., x(a_p), a_1, ..., a_p) da.
/// On a step function each axis integral becomes a sum over cells; inside a
/// cell f is integrated in `a` by a `cell_nodes`-point Gauss-Legendre rule,
/// which is exact when f is a polynomial of degree < 2 cell_nodes in each a.
struct IntegralCylinder {
  std::size_t p = 1;
  std::function<double(std::span<const double> values, std::span<const double> alphas)> f;
  std::size_t cell_nodes = 2;
};

/// U(x) = sum_j int K_j(t_1..t_j) x(t_1)...x(t_j) dt, kernels[j-1] = K_j.
/// An empty kernel slot is the zero kernel.
struct VolterraSeries {
  std::vector<std::function<double(std::span<const double>)>> kernels;
  std::size_t cell_nodes = 4;
};

class Functional {
public:
  using Variant = std::variant<PointCylinder, IntegralCylinder, VolterraSeries>;

  Functional(PointCylinder c) : impl_(std::move(c)) { validate(); }
  Functional(IntegralCylinder c) : impl_(std::move(c)) { validate(); }
  Functional(VolterraSeries c) : impl_(std::move(c)) { validate(); }

  const Variant& variant() const noexcept { return impl_; }

  template <typename T>
  const T* as() const noexcept
  {
    return std::get_if<T>(&impl_);
  }

private:
  void validate() const
  {
    if (const auto* c = as<PointCylinder>()) {
      if (!c->g) {
        throw DomainError("PointCylinder: missing g");
      }
      if (c->alphas.empty()) {
        throw DomainError("PointCylinder: needs p >= 1 points");
      }
      for (const double a : c->alphas) {
        if (!(a >= 0.0 && a <= 1.0)) {
          throw DomainError("PointCylinder: alpha outside [0, 1]");
        }
      }
    } else if (const auto* c = as<IntegralCylinder>()) {
      if (c->p == 0 || !c->f) {
        throw DomainError("IntegralCylinder: needs p >= 1 and f");
      }
      if (c->cell_nodes == 0) {
        throw DomainError("IntegralCylinder: cell_nodes must be positive");
      }
    } else if (const auto* c = as<VolterraSeries>()) {
      if (c->kernels.empty()) {
        throw DomainError("VolterraSeries: kernel list is empty");
      }
      if (c->cell_nodes == 0) {
        throw DomainError("VolterraSeries: cell_nodes must be positive");
      }
    }
  }

  Variant impl_;
};

namespace detail {

inline double checked(double value, const char* what)
{
  if (!std::isfinite(value)) {
    throw EvaluationError(std::string(what) + " returned a non-finite value");
  }
  return value;
}

/// Calls body(indices) for every tuple in {0..n-1}^p, last index fastest.
template <typename Body>
void for_each_tuple(std::size_t n, std::size_t p, Body&& body)
{
  std::vector<std::size_t> idx(p, 0);
  for (;;) {
    body(std::span<const std::size_t>(idx));
    std::size_t axis = p;
    while (axis > 0) {
      --axis;
      if (++idx[axis] < n) {
        break;
      }
      idx[axis] = 0;
      if (axis == 0) {
        return;
      }
    }
    if (p == 0) {
      return;
    }
  }
}

/// Gauss-Legendre nodes of every cell of an n-cell partition, flattened
/// cell-major, with weights already including the cell width.
struct CellRule {
  std::size_t per_cell = 1;
  std::vector<double> nodes;
  std::vector<double> weights;

  CellRule(std::size_t n, std::size_t order) : per_cell(order)
  {
    const QuadratureRule ref = gauss_legendre(order);
    nodes.reserve(n * order);
    weights.reserve(n * order);
    const double h = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double mid = (static_cast<double>(i) + 0.5) * h;
      for (std::size_t q = 0; q < order; ++q) {
        nodes.push_back(mid + 0.5 * h * ref.nodes[q]);
        weights.push_back(0.5 * h * ref.weights[q]);
      }
    }
  }
};

} // namespace detail

/// A functional bound to a fixed partition size n. Volterra kernels are
/// integrated over cell tuples once, so repeated evaluations are cheap.
class SectionEvaluator {
public:
  static constexpr std::size_t kMaxStoredWeights = std::size_t{1} << 22;

  SectionEvaluator(const Functional& func, std::size_t n) : func_(func), n_(n)
  {
    if (n == 0) {
      throw DomainError("SectionEvaluator: n must be positive");
    }
    if (const auto* c = func.as<PointCylinder>()) {
      cells_.reserve(c->alphas.size());
      for (const double a : c->alphas) {
        cells_.push_back(StepFunction::cell_of(a, n));
      }
    } else if (const auto* c = func.as<IntegralCylinder>()) {
      rule_.emplace(n, c->cell_nodes);
    } else if (const auto* c = func.as<VolterraSeries>()) {
      rule_.emplace(n, c->cell_nodes);
      weights_.resize(c->kernels.size());
      for (std::size_t j = 0; j < c->kernels.size(); ++j) {
        const std::size_t order = j + 1;
        if (!c->kernels[j] || !fits(order)) {
          continue;
        }
        auto& w = weights_[j];
        w.reserve(power(n, order));
        detail::for_each_tuple(n, order, [&](std::span<const std::size_t> cells) {
          w.push_back(kernel_cell_integral(c->kernels[j], cells));
        });
      }
    }
  }

  std::size_t n() const noexcept { return n_; }

  double operator()(std::span<const double> x) const
  {
    if (x.size() != n_) {
      throw DomainError("SectionEvaluator: expected " + std::to_string(n_) + " cell values, got " +
                        std::to_string(x.size()));
    }
    return std::visit([&](const auto& c) { return eval(c, x); }, func_.variant());
  }

  double operator()(const StepFunction& x) const { return (*this)(x.values()); }

private:
  static std::size_t power(std::size_t n, std::size_t p)
  {
    std::size_t r = 1;
    for (std::size_t i = 0; i < p; ++i) {
      r *= n;
    }
    return r;
  }

  bool fits(std::size_t order) const
  {
    std::size_t r = 1;
    for (std::size_t i = 0; i < order; ++i) {
      if (r > kMaxStoredWeights / n_) {
        return false;
      }
      r *= n_;
    }
    return true;
  }

  /// int over the product of cells of K, by the tensor cell rule.
  double kernel_cell_integral(const std::function<double(std::span<const double>)>& kernel,
                              std::span<const std::size_t> cells) const
  {
    const std::size_t order = cells.size();
    const std::size_t q = rule_->per_cell;
    std::vector<double> t(order);
    double sum = 0.0;
    detail::for_each_tuple(q, order, [&](std::span<const std::size_t> nodes) {
      double weight = 1.0;
      for (std::size_t k = 0; k < order; ++k) {
        const std::size_t at = cells[k] * q + nodes[k];
        t[k] = rule_->nodes[at];
        weight *= rule_->weights[at];
      }
      sum += weight * detail::checked(kernel(t), "Volterra kernel");
    });
    return sum;
  }

  double eval(const PointCylinder& c, std::span<const double> x) const
  {
    std::vector<double> v(cells_.size());
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      v[i] = x[cells_[i]];
    }
    return detail::checked(c.g(v), "PointCylinder g");
  }

  double eval(const IntegralCylinder& c, std::span<const double> x) const
  {
    const auto& rule = *rule_;
    const std::size_t total = rule.nodes.size();
    std::vector<double> values(c.p), alphas(c.p);
    double sum = 0.0;
    detail::for_each_tuple(total, c.p, [&](std::span<const std::size_t> at) {
      double weight = 1.0;
      for (std::size_t k = 0; k < c.p; ++k) {
        alphas[k] = rule.nodes[at[k]];
        values[k] = x[at[k] / rule.per_cell];
        weight *= rule.weights[at[k]];
      }
      sum += weight * detail::checked(c.f(values, alphas), "IntegralCylinder f");
    });
    return sum;
  }

  double eval(const VolterraSeries& c, std::span<const double> x) const
  {
    double total = 0.0;
    for (std::size_t j = 0; j < c.kernels.size(); ++j) {
      if (!c.kernels[j]) {
        continue;
      }
      const std::size_t order = j + 1;
      const bool stored = !weights_[j].empty();
      if (stored && order <= 2) {
        total += contract_low_order(weights_[j], order, x);
        continue;
      }
      std::size_t flat = 0;
      double sum = 0.0;
      detail::for_each_tuple(n_, order, [&](std::span<const std::size_t> cells) {
        double product = 1.0;
        for (const auto i : cells) {
          product *= x[i];
        }
        const double w = stored ? weights_[j][flat++] : kernel_cell_integral(c.kernels[j], cells);
        sum += w * product;
      });
      total += sum;
    }
    return total;
  }

  double contract_low_order(const std::vector<double>& w, std::size_t order, std::span<const double> x) const
  {
    double sum = 0.0;
    if (order == 1) {
      for (std::size_t i = 0; i < n_; ++i) {
        sum += w[i] * x[i];
      }
      return sum;
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const double* row = w.data() + i * n_;
      double inner = 0.0;
      for (std::size_t k = 0; k < n_; ++k) {
        inner += row[k] * x[k];
      }
      sum += x[i] * inner;
    }
    return sum;
  }

  Functional func_;
  std::size_t n_;
  std::vector<std::size_t> cells_;
  std::optional<detail::CellRule> rule_;
  std::vector<std::vector<double>> weights_;
};

/// Exact value of the functional on the step function x.
inline double evaluate(const Functional& func, const StepFunction& x)
{
  return SectionEvaluator(func, x.size())(x);
}

/// Central difference [U(x + eh) - U(x - eh)] / 2e with one Richardson step
/// over (e, e/2). Default e = 1e-4 (1 + |x|_inf).
inline double gateaux_differential(const Functional& func, const StepFunction& x, const StepFunction& h,
                                   std::optional<double> epsilon = std::nullopt)
{
  if (x.size() != h.size()) {
    throw DomainError("gateaux_differential: x has " + std::to_string(x.size()) + " cells, h has " +
                      std::to_string(h.size()));
  }
  const double eps = epsilon.value_or(1e-4 * (1.0 + x.sup_norm()));
  if (!(eps > 0.0)) {
    throw DomainError("gateaux_differential: epsilon must be positive");
  }
  const SectionEvaluator u(func, x.size());
  auto central = [&](double e) { return (u(x.axpy(e, h)) - u(x.axpy(-e, h))) / (2.0 * e); };
  const double coarse = central(eps);
  const double fine = central(0.5 * eps);
  return (4.0 * fine - coarse) / 3.0;
}

} // namespace gateaux
