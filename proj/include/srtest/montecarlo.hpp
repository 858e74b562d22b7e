#pragma once

#include "srtest/parallel.hpp"
#include "srtest/rng.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace srtest {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t draws = 0;
};

/// Running mean and co-moment of a K-vector, mergeable in a fixed order.
template <std::size_t K>
struct MomentAccumulator {
  std::size_t count = 0;
  std::array<double, K> mean{};
  std::array<std::array<double, K>, K> comoment{};

  void add(const std::array<double, K>& x) {
    ++count;
    std::array<double, K> delta_before{};
    for (std::size_t a = 0; a < K; ++a) {
      delta_before[a] = x[a] - mean[a];
      mean[a] += delta_before[a] / static_cast<double>(count);
    }
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t b = 0; b < K; ++b) comoment[a][b] += delta_before[a] * (x[b] - mean[b]);
  }

  void merge(const MomentAccumulator& o) {
    if (o.count == 0) return;
    if (count == 0) {
      *this = o;
      return;
    }
    const double n1 = static_cast<double>(count);
    const double n2 = static_cast<double>(o.count);
    const double n = n1 + n2;
    std::array<double, K> delta{};
    for (std::size_t a = 0; a < K; ++a) delta[a] = o.mean[a] - mean[a];
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t b = 0; b < K; ++b)
        comoment[a][b] += o.comoment[a][b] + delta[a] * delta[b] * n1 * n2 / n;
    for (std::size_t a = 0; a < K; ++a) mean[a] += delta[a] * n2 / n;
    count += o.count;
  }

  /// Covariance of the sample mean vector.
  double mean_covariance(std::size_t a, std::size_t b) const {
    if (count < 2) return 0.0;
    const double n = static_cast<double>(count);
    return comoment[a][b] / (n - 1.0) / n;
  }
};

inline constexpr std::size_t kMonteCarloChunk = 4096;

/// Draws `draws` K-vectors in fixed-size chunks; chunk c uses the substream
/// derive_seed(seed, {c}). Chunks merge in index order, so the result does not
/// depend on `threads`.
template <std::size_t K, class Draw>
MomentAccumulator<K> monte_carlo_moments(std::size_t draws, std::uint64_t seed, int threads,
                                         Draw&& draw) {
  const std::size_t chunks = (draws + kMonteCarloChunk - 1) / kMonteCarloChunk;
  std::vector<MomentAccumulator<K>> parts(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    Engine eng = make_engine(derive_seed(seed, {c}));
    const std::size_t begin = c * kMonteCarloChunk;
    const std::size_t end = std::min(draws, begin + kMonteCarloChunk);
    for (std::size_t i = begin; i < end; ++i) parts[c].add(draw(eng));
  });
  MomentAccumulator<K> total;
  for (const auto& part : parts) total.merge(part);
  return total;
}

template <class Draw>
McEstimate monte_carlo_mean(std::size_t draws, std::uint64_t seed, int threads, Draw&& draw) {
  auto acc = monte_carlo_moments<1>(draws, seed, threads,
                                    [&](Engine& eng) { return std::array<double, 1>{draw(eng)}; });
  return {acc.mean[0], std::sqrt(acc.mean_covariance(0, 0)), acc.count};
}

}  // namespace srtest
