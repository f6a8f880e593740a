#pragma once

/// Small statistics toolkit shared by the experiments: compensated sums,
/// mergeable running moments, Kolmogorov-Smirnov distance and log-log fits.

#include "gateaux/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace gateaux {

/// Neumaier's variant of Kahan summation.
class CompensatedSum {
public:
  void add(double x) noexcept
  {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double x) noexcept
  {
    add(x);
    return *this;
  }

  void merge(const CompensatedSum& other) noexcept
  {
    add(other.sum_);
    add(other.compensation_);
  }

  double value() const noexcept { return sum_ + compensation_; }

private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// Welford accumulator; `merge` is Chan's pairwise update.
class RunningMoments {
public:
  void push(double x) noexcept
  {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
  }

  void merge(const RunningMoments& other) noexcept
  {
    if (other.count_ == 0) {
      return;
    }
    if (count_ == 0) {
      *this = other;
      return;
    }
    const double n_a = static_cast<double>(count_);
    const double n_b = static_cast<double>(other.count_);
    const double n = n_a + n_b;
    const double delta = other.mean_ - mean_;
    mean_ += delta * n_b / n;
    m2_ += other.m2_ + delta * delta * n_a * n_b / n;
    count_ += other.count_;
  }

  std::uint64_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double m2() const noexcept { return m2_; }

  /// Unbiased sample variance; 0 with fewer than two observations.
  double variance() const noexcept
  {
    return count_ > 1 ? std::max(0.0, m2_ / static_cast<double>(count_ - 1)) : 0.0;
  }

  double standard_error() const noexcept
  {
    return count_ > 1 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
  }

private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline double normal_cdf(double x) noexcept
{
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

inline double normal_pdf(double x) noexcept
{
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// sup_x |F_m(x) - F(x)| for the empirical distribution of `samples`.
template <typename Cdf>
double ks_distance(std::span<const double> samples, Cdf&& cdf)
{
  if (samples.empty()) {
    throw DomainError("ks_distance: empty sample");
  }
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size());
  double sup = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double above = static_cast<double>(i + 1) / m - f;
    const double below = f - static_cast<double>(i) / m;
    sup = std::max({sup, std::abs(above), std::abs(below)});
  }
  return sup;
}

struct LogLogFit {
  double exponent = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

struct FitPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Least squares of log(y) on log(x).
inline LogLogFit loglog_fit(std::span<const FitPoint> points)
{
  if (points.size() < 3) {
    throw DomainError("loglog_fit: need at least 3 points");
  }
  double sx = 0.0, sy = 0.0;
  for (const auto& p : points) {
    if (!(p.x > 0.0) || !(p.y > 0.0)) {
      throw DomainError("loglog_fit: nonpositive value");
    }
    sx += std::log(p.x);
    sy += std::log(p.y);
  }
  const double m = static_cast<double>(points.size());
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.x) - mx;
    const double dy = std::log(p.y) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) {
    throw DomainError("loglog_fit: all abscissae equal");
  }
  LogLogFit fit;
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

} // namespace gateaux
