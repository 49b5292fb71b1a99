#pragma once

#include <cstdint>
#include <random>

#include "ifdid/prob_dist.hpp"

namespace ifdid {

/// Portable random source. std::mt19937_64 and std::seed_seq are specified
/// bit-for-bit by the standard; the conversion to [0, 1) is done here because
/// std::uniform_real_distribution is not. Streams with different
/// (seed, stream) pairs are seeded independently.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t next() { return engine_(); }

  // 53 random bits scaled into [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Inverse-CDF draw in id order. Consumes exactly one uniform.
inline TokenId sample(const ProbDist& dist, Rng& rng) {
  const double u = rng.uniform();
  const auto& p = dist.vector();
  double total = 0.0;
  for (double x : p) total += x;
  const double target = u * total;
  double cum = 0.0;
  TokenId last = -1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0)) continue;
    cum += p[i];
    last = static_cast<TokenId>(i);
    if (target < cum) return last;
  }
  return last;
}

/// Uniform draw over the support of `dist`. Consumes exactly one uniform.
inline TokenId sample_support_uniformly(const ProbDist& dist, Rng& rng) {
  const double u = rng.uniform();
  const std::size_t n = dist.support_size();
  auto pick = static_cast<std::size_t>(u * static_cast<double>(n));
  if (pick >= n) pick = n - 1;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist.vector()[i] > 0.0) {
      if (pick == 0) return static_cast<TokenId>(i);
      --pick;
    }
  }
  return -1;
}

}  // namespace ifdid
