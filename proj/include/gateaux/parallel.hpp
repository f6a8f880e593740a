#pragma once

/// Chunked Monte Carlo driver.
///
/// Sample i always draws from sub-stream i of the caller's seed path and the
/// per-block partial sums are merged in block order, so the result does not
/// depend on how many threads ran the blocks.

#include "gateaux/errors.hpp"
#include "gateaux/rng.hpp"
#include "gateaux/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace gateaux {

inline constexpr std::uint64_t kMonteCarloBlock = 1024;

/// 0 means "one per hardware thread".
inline unsigned resolve_threads(unsigned threads) noexcept
{
  if (threads != 0) {
    return threads;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(block) for every block in [0, blocks), spreading blocks over
/// threads round-robin. The first exception (lowest block) is rethrown.
template <typename Body>
void for_each_block(std::uint64_t blocks, unsigned threads, Body&& body)
{
  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(resolve_threads(threads), std::max<std::uint64_t>(blocks, 1)));
  std::vector<std::exception_ptr> errors(blocks);
  auto work = [&](unsigned worker) {
    for (std::uint64_t b = worker; b < blocks; b += workers) {
      try {
        body(b);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back(work, w);
    }
  }
  for (const auto& error : errors) {
    if (error) {
      std::rethrow_exception(error);
    }
  }
}

struct MonteCarloResult {
  double mean = 0.0;
  double std_error = 0.0;
  RunningMoments moments;
};

/// Averages sample(stream, index) over `samples` draws. `sample` must be
/// callable concurrently.
template <typename Sample>
MonteCarloResult monte_carlo_mean(std::uint64_t samples, const SeedPath& seed, Sample&& sample,
                                  unsigned threads = 1)
{
  if (samples == 0) {
    throw DomainError("monte_carlo_mean: zero samples");
  }
  const std::uint64_t key = seed.key();
  const std::uint64_t blocks = (samples + kMonteCarloBlock - 1) / kMonteCarloBlock;
  std::vector<CompensatedSum> sums(blocks);
  std::vector<RunningMoments> moments(blocks);

  for_each_block(blocks, threads, [&](std::uint64_t b) {
    const std::uint64_t begin = b * kMonteCarloBlock;
    const std::uint64_t end = std::min(samples, begin + kMonteCarloBlock);
    for (std::uint64_t i = begin; i < end; ++i) {
      Stream stream = derive_stream(key, i);
      double value;
      try {
        value = sample(stream, i);
      } catch (const std::exception& e) {
        throw EvaluationError("sample " + std::to_string(i) + ": " + e.what());
      }
      if (!std::isfinite(value)) {
        throw EvaluationError("sample " + std::to_string(i) + ": non-finite value");
      }
      sums[b].add(value);
      moments[b].push(value);
    }
  });

  CompensatedSum total;
  MonteCarloResult out;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    total.merge(sums[b]);
    out.moments.merge(moments[b]);
  }
  out.mean = total.value() / static_cast<double>(samples);
  out.std_error = out.moments.standard_error();
  return out;
}

} // namespace gateaux
