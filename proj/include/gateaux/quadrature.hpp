#pragma once

#include "gateaux/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace gateaux {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const noexcept { return nodes.size(); }

  template <typename F>
  double integrate(F&& f) const
  {
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      sum += weights[i] * f(nodes[i]);
    }
    return sum;
  }
};

/// Gauss-Legendre rule of `order` points on [-1, 1], nodes ascending.
inline QuadratureRule gauss_legendre(std::size_t order)
{
  if (order == 0) {
    throw DomainError("gauss_legendre: order must be positive");
  }
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const std::size_t half = (order + 1) / 2;
  const double n = static_cast<double>(order);
  for (std::size_t i = 0; i < half; ++i) {
    // Tricomi's initial guess, then Newton on P_n.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
    double derivative = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= order; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      derivative = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / derivative;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    const double w = 2.0 / ((1.0 - x * x) * derivative * derivative);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1) {
    rule.nodes[order / 2] = 0.0;
  }
  return rule;
}

/// The Gauss-Legendre rule affinely mapped onto [a, b].
inline QuadratureRule gauss_legendre(std::size_t order, double a, double b)
{
  QuadratureRule rule = gauss_legendre(order);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

/// Gauss-Hermite rule for the standard normal law: sum w_i f(x_i) approximates
/// E[f(Z)], Z ~ N(0, 1). Weights sum to one.
inline QuadratureRule gauss_hermite_normal(std::size_t order)
{
  if (order == 0) {
    throw DomainError("gauss_hermite_normal: order must be positive");
  }
  // Physicists' nodes via Newton on orthonormal Hermite functions, with the
  // classical asymptotic initial guesses.
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const std::size_t m = (order + 1) / 2;
  const double n = static_cast<double>(order);
  std::vector<double> t(order), w(order);
  double z = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(n, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * t[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * t[1];
    } else {
      z = 2.0 * z - t[i - 2];
    }
    double pp = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
      double p1 = pim4, p2 = 0.0;
      for (std::size_t j = 0; j < order; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jj = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / (jj + 1.0)) * p2 - std::sqrt(jj / (jj + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) <= 1e-15 * std::max(1.0, std::abs(z))) {
        break;
      }
    }
    t[i] = z;
    t[order - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[order - 1 - i] = w[i];
  }
  if (order % 2 == 1) {
    t[order / 2] = 0.0;
  }
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (std::size_t i = 0; i < order; ++i) {
    // ascending order
    rule.nodes[i] = -t[i] * std::numbers::sqrt2;
    rule.weights[i] = w[i] / std::sqrt(std::numbers::pi);
  }
  return rule;
}

} // namespace gateaux
