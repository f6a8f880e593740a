#pragma once

/// Deterministic, splittable random streams.
///
/// A stream is identified by a root seed and a path of split indices. The
/// state is obtained by hashing (root, path), never by jumping ahead, so a
/// chunk of work gets the same numbers whatever thread or chunk count runs it.

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <vector>

namespace gateaux {

inline constexpr std::uint64_t kDefaultSeed = 0x6a7e5a11u;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

class SeedPath {
public:
  SeedPath() = default;
  explicit SeedPath(std::uint64_t root) : root_(root) {}
  SeedPath(std::uint64_t root, std::initializer_list<std::uint64_t> path)
    : root_(root), path_(path) {}

  std::uint64_t root() const noexcept { return root_; }
  const std::vector<std::uint64_t>& path() const noexcept { return path_; }

  /// A child path with one more split index.
  SeedPath child(std::uint64_t index) const
  {
    SeedPath out = *this;
    out.path_.push_back(index);
    return out;
  }

  /// 64-bit key of (root, path). Length is mixed in so that [] and [0] differ.
  std::uint64_t key() const noexcept
  {
    std::uint64_t h = mix64(root_ ^ 0x243f6a8885a308d3ull);
    for (const auto index : path_) {
      h = mix64(h ^ mix64(index + 0x13198a2e03707344ull));
    }
    return mix64(h ^ (path_.size() * 0xa4093822299f31d0ull));
  }

  friend bool operator==(const SeedPath&, const SeedPath&) = default;

private:
  std::uint64_t root_ = kDefaultSeed;
  std::vector<std::uint64_t> path_;
};

/// xoshiro256** generator with Gaussian and gamma variates. Satisfies
/// UniformRandomBitGenerator so it also plugs into <random> algorithms.
class Stream {
public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t key) noexcept
  {
    std::uint64_t z = key;
    for (auto& word : state_) {
      z += 0x9e3779b97f4a7c15ull;
      word = mix64(z);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept
  {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept
  {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_left() noexcept
  {
    return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal by the ratio-of-uniforms method with Leva's quadratic
  /// bounds (about 1.37 uniform pairs per variate).
  double gaussian() noexcept
  {
    constexpr double s = 0.449871, t = -0.386595, a = 0.19600, b = 0.25472;
    constexpr double r1 = 0.27597, r2 = 0.27846;
    for (;;) {
      const double u = uniform_open_left();
      const double v = 1.7156 * (uniform() - 0.5);
      const double x = u - s;
      const double y = std::abs(v) - t;
      const double q = x * x + y * (a * y - b * x);
      if (q < r1) {
        return v / u;
      }
      if (q > r2) {
        continue;
      }
      if (v * v <= -4.0 * std::log(u) * u * u) {
        return v / u;
      }
    }
  }

  /// Gamma(shape, 1) by Marsaglia and Tsang; shape < 1 uses the u^(1/shape)
  /// boost. shape == 0 returns 0.
  double gamma(double shape) noexcept
  {
    if (shape <= 0.0) {
      return 0.0;
    }
    if (shape < 1.0) {
      const double boost = std::pow(uniform_open_left(), 1.0 / shape);
      return gamma(shape + 1.0) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = gaussian();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open_left();
      if (u < 1.0 - 0.0331 * (x * x) * (x * x)) {
        return d * v;
      }
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
        return d * v;
      }
    }
  }

  /// Chi-square with `dof` degrees of freedom.
  double chi_square(double dof) noexcept { return 2.0 * gamma(0.5 * dof); }

private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept
  {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

inline Stream derive_stream(const SeedPath& seed_path) { return Stream(seed_path.key()); }

/// Sub-stream `index` under an already derived key. Allocation free, for
/// per-sample streams in hot loops.
inline Stream derive_stream(std::uint64_t base_key, std::uint64_t index)
{
  return Stream(mix64(base_key ^ mix64(index + 0x13198a2e03707344ull)));
}

} // namespace gateaux
