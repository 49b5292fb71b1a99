#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support.hpp"

using namespace ifdid;
using testing_support::Gen;
using testing_support::sum;

namespace {

const ProbDist kDyadic(std::vector<double>{0.5, 0.25, 0.125, 0.125});

TEST(Passes, UniformAlwaysPasses) {
  for (std::size_t n : {1u, 2u, 7u, 64u, 1000u}) {
    for (double eps : {0.0, 1e-12, 0.3, 5.0}) {
      EXPECT_EQ(filter(ProbDist::uniform(n), {eps}), ProbDist::uniform(n));
      for (std::size_t t = 0; t < n; ++t) EXPECT_TRUE(passes(ProbDist::uniform(n), static_cast<TokenId>(t), {eps}));
    }
  }
}

TEST(Passes, DyadicBand) {
  EXPECT_TRUE(passes(kDyadic, 0, {0.6}));
  EXPECT_FALSE(passes(kDyadic, 2, {0.6}));
  const double h = entropy(kDyadic);
  EXPECT_NEAR(std::abs(h - information(kDyadic, 0)), 0.5198603854199589, 1e-12);
  EXPECT_NEAR(std::abs(h - information(kDyadic, 2)), 0.8664339756999315, 1e-12);
}

TEST(Passes, ZeroWidthBandRejectsNonTypicalTokens) {
  for (TokenId t = 0; t < 4; ++t) EXPECT_FALSE(passes(kDyadic, t, {0.0}));
  // uniform over the support, with an unsupported token
  const ProbDist pair(std::vector<double>{0.5, 0.5, 0.0});
  EXPECT_TRUE(passes(pair, 0, {0.0}));
  EXPECT_EQ(filter(pair, {0.0}), pair);
  EXPECT_FALSE(passes(ProbDist(std::vector<double>{0.5, 0.5, 0.0}), 2, {100.0}));
  EXPECT_THROW(passes(kDyadic, 0, {-1.0}), ParameterError);
}

TEST(Filter, PinnedExample) {
  const auto r = filter_detailed(kDyadic, {0.6});
  EXPECT_NEAR(r.dist[0], 2.0 / 3.0, 1e-4);
  EXPECT_NEAR(r.dist[1], 1.0 / 3.0, 1e-4);
  EXPECT_EQ(r.dist[2], 0.0);
  EXPECT_EQ(r.dist[3], 0.0);
  EXPECT_EQ(r.survivors, 2u);
  EXPECT_FALSE(r.fallback);
}

TEST(Filter, InfiniteEpsilonIsIdentity) {
  Gen gen(1);
  const FilterParams off{std::numeric_limits<double>::infinity()};
  for (int trial = 0; trial < 500; ++trial) {
    const auto d = gen.dist(gen.range(1, 50));
    EXPECT_EQ(filter(d, off), d);
  }
}

TEST(Filter, FallbackKeepsClosestToken) {
  // gaps: token0 0.52, token1 0.17, token2/3 0.87
  const auto r = filter_detailed(kDyadic, {0.01});
  EXPECT_TRUE(r.fallback);
  EXPECT_EQ(r.survivors, 1u);
  EXPECT_EQ(r.dist, ProbDist::one_hot(4, 1));
}

TEST(Filter, FallbackTieGoesToLowestId) {
  // the two 0.45 tokens share the smallest gap
  EXPECT_EQ(filter(ProbDist(std::vector<double>{0.45, 0.1, 0.45}), {0.0}), ProbDist::one_hot(3, 0));
  EXPECT_EQ(filter(ProbDist(std::vector<double>{0.1, 0.45, 0.45}), {0.0}), ProbDist::one_hot(3, 1));
}

// Survivor set from first principles, without the library's entropy helper.
std::vector<bool> brute_force(const ProbDist& d, double eps) {
  long double h = 0;
  for (double p : d.probs()) {
    if (p > 0) h -= static_cast<long double>(p) * std::log(static_cast<long double>(p));
  }
  std::vector<bool> keep(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double p = d.vector()[i];
    keep[i] = p > 0 && std::abs(static_cast<double>(h) + std::log(p)) <= eps;
  }
  return keep;
}

TEST(Filter, AgreesWithBruteForceAndIsMonotone) {
  Gen gen(2);
  int compared = 0;
  for (int trial = 0; trial < 3000; ++trial) {
    const auto d = gen.dist(gen.range(1, 64));
    const double eps = gen.real(0.0, 3.0);
    const auto expect = brute_force(d, eps);
    const auto r = filter_detailed(d, {eps});
    // skip instances sitting within rounding of the band edge
    bool borderline = false;
    const double h = entropy(d);
    for (double p : d.probs()) {
      if (p > 0 && std::abs(std::abs(h + std::log(p)) - eps) < 1e-12) borderline = true;
    }
    if (borderline) continue;
    ++compared;
    const auto kept = std::count(expect.begin(), expect.end(), true);
    if (kept == 0) {
      EXPECT_TRUE(r.fallback);
      EXPECT_EQ(r.dist.support_size(), 1u);
    } else {
      for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(r.dist.vector()[i] > 0, expect[i]);
      EXPECT_EQ(r.survivors, static_cast<std::size_t>(kept));
    }
    EXPECT_NEAR(sum(r.dist), 1.0, 1e-9);
    // a wider band never drops a survivor
    const auto wider = filter_detailed(d, {eps + gen.real(0.0, 1.0)});
    if (!r.fallback) {
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (r.dist.vector()[i] > 0) {
          EXPECT_GT(wider.dist.vector()[i], 0.0);
        }
      }
    }
  }
  EXPECT_GT(compared, 2900);
}

TEST(Filter, SurvivorsKeepRelativeRatios) {
  Gen gen(3);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto d = gen.dist(gen.range(2, 30));
    const auto r = filter_detailed(d, {gen.real(0.1, 2.0)});
    if (r.fallback) continue;
    double ratio = -1;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (r.dist.vector()[i] == 0.0) continue;
      const double x = r.dist.vector()[i] / d.vector()[i];
      if (ratio < 0) ratio = x;
      EXPECT_NEAR(x / ratio, 1.0, 1e-9);
    }
  }
}

}  // namespace
