#pragma once

/// Natural density and Cesaro means on the positive integers {1, 2, ...}.

#include "gateaux/errors.hpp"
#include "gateaux/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gateaux {

struct DensityCheckpoint {
  std::uint64_t N = 0;
  double value = 0.0;
};

struct DensityEstimate {
  std::uint64_t N = 0;
  double value = 0.0;
  std::vector<DensityCheckpoint> trace;
};

using IntegerPredicate = std::function<bool(std::uint64_t)>;
using IntegerFunction = std::function<double(std::uint64_t)>;

namespace detail {

/// `count` geometrically spaced horizons in [1, N], strictly increasing,
/// always ending at N.
inline std::vector<std::uint64_t> geometric_checkpoints(std::uint64_t N, std::size_t count)
{
  std::vector<std::uint64_t> out;
  if (count == 0) {
    return out;
  }
  for (std::size_t i = 1; i <= count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count);
    auto k = static_cast<std::uint64_t>(std::llround(std::pow(static_cast<double>(N), t)));
    k = std::clamp<std::uint64_t>(k, 1, N);
    if (out.empty() || k > out.back()) {
      out.push_back(k);
    }
  }
  if (out.back() != N) {
    out.push_back(N);
  }
  return out;
}

} // namespace detail

/// card{1 <= k <= N : predicate(k)} / N, with the running ratio recorded at
/// `checkpoints` geometric horizons.
inline DensityEstimate density(const IntegerPredicate& predicate, std::uint64_t N, std::size_t checkpoints = 0)
{
  if (N == 0) {
    throw DomainError("density: N must be at least 1");
  }
  const auto marks = detail::geometric_checkpoints(N, checkpoints);
  DensityEstimate out;
  out.N = N;
  std::uint64_t count = 0;
  std::size_t next = 0;
  for (std::uint64_t k = 1; k <= N; ++k) {
    bool hit;
    try {
      hit = predicate(k);
    } catch (const std::exception& e) {
      throw EvaluationError("density: predicate failed at k = " + std::to_string(k) + ": " + e.what());
    }
    count += hit ? 1 : 0;
    if (next < marks.size() && marks[next] == k) {
      out.trace.push_back({k, static_cast<double>(count) / static_cast<double>(k)});
      ++next;
    }
  }
  out.value = static_cast<double>(count) / static_cast<double>(N);
  return out;
}

/// (1/N) sum_{k=1}^N f(k), compensated.
inline DensityEstimate cesaro_mean(const IntegerFunction& f, std::uint64_t N)
{
  if (N == 0) {
    throw DomainError("cesaro_mean: N must be at least 1");
  }
  CompensatedSum sum;
  for (std::uint64_t k = 1; k <= N; ++k) {
    const double v = f(k);
    if (!std::isfinite(v)) {
      throw EvaluationError("cesaro_mean: f(" + std::to_string(k) + ") is not finite");
    }
    sum.add(v);
  }
  DensityEstimate out;
  out.N = N;
  out.value = sum.value() / static_cast<double>(N);
  return out;
}

struct DensityDiagnostic {
  std::vector<DensityCheckpoint> values;
  /// Largest gap between any two densities in the tail half of the horizons.
  double oscillation = 0.0;
};

/// Densities at every horizon in N_list (one streaming pass up to the last).
inline DensityDiagnostic convergence_diagnostic(const IntegerPredicate& predicate,
                                                std::span<const std::uint64_t> N_list)
{
  if (N_list.empty()) {
    throw DomainError("convergence_diagnostic: N_list is empty");
  }
  for (std::size_t i = 0; i < N_list.size(); ++i) {
    if (N_list[i] == 0 || (i > 0 && N_list[i] <= N_list[i - 1])) {
      throw DomainError("convergence_diagnostic: N_list must be positive and strictly increasing");
    }
  }
  DensityDiagnostic out;
  std::uint64_t count = 0;
  std::size_t next = 0;
  for (std::uint64_t k = 1; next < N_list.size(); ++k) {
    count += predicate(k) ? 1 : 0;
    if (k == N_list[next]) {
      out.values.push_back({k, static_cast<double>(count) / static_cast<double>(k)});
      ++next;
    }
  }
  const std::size_t tail = out.values.size() / 2;
  double lo = out.values[tail].value, hi = lo;
  for (std::size_t i = tail; i < out.values.size(); ++i) {
    lo = std::min(lo, out.values[i].value);
    hi = std::max(hi, out.values[i].value);
  }
  out.oscillation = hi - lo;
  return out;
}

namespace predicates {

inline IntegerPredicate even()
{
  return [](std::uint64_t k) { return k % 2 == 0; };
}

inline IntegerPredicate multiple_of(std::uint64_t m)
{
  if (m == 0) {
    throw DomainError("multiple_of: modulus must be positive");
  }
  return [m](std::uint64_t k) { return k % m == 0; };
}

inline std::uint64_t isqrt(std::uint64_t k) noexcept
{
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(k)));
  while (r * r > k) {
    --r;
  }
  while ((r + 1) * (r + 1) <= k) {
    ++r;
  }
  return r;
}

inline IntegerPredicate square()
{
  return [](std::uint64_t k) {
    const auto r = isqrt(k);
    return r * r == k;
  };
}

inline IntegerPredicate squarefree()
{
  return [](std::uint64_t k) {
    for (std::uint64_t p = 2; p * p <= k; ++p) {
      if (k % (p * p) == 0) {
        return false;
      }
      if (k % p == 0) {
        k /= p;
      }
    }
    return true;
  };
}

inline IntegerPredicate leading_digit(unsigned digit)
{
  if (digit < 1 || digit > 9) {
    throw DomainError("leading_digit: digit must be in 1..9");
  }
  return [digit](std::uint64_t k) {
    while (k >= 10) {
      k /= 10;
    }
    return k == digit;
  };
}

inline IntegerPredicate none()
{
  return [](std::uint64_t) { return false; };
}

inline IntegerPredicate all()
{
  return [](std::uint64_t) { return true; };
}

} // namespace predicates

} // namespace gateaux
