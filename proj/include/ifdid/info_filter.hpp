#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "ifdid/error.hpp"
#include "ifdid/prob_dist.hpp"

namespace ifdid {

struct FilterParams {
  double epsilon = 0.1;  // nats; +infinity disables the filter

  void validate() const {
    if (!(epsilon >= 0.0)) throw ParameterError("filter epsilon must be >= 0");
  }
};

namespace detail {

// The band edge carries a few ulps of slack relative to Ent(q): on a uniform
// distribution the gap is zero exactly but the summed entropy and ln q can
// round apart, and epsilon = 0 must still keep every token.
inline bool in_band(double gap, double entropy, double epsilon) {
  const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, entropy);
  return gap <= epsilon + slack;
}

}  // namespace detail

/// True iff q(t) > 0 and |Ent(q) - I(t)| <= epsilon.
inline bool passes(const ProbDist& dist, TokenId t, const FilterParams& params) {
  params.validate();
  const double q = dist.at(t);
  if (!(q > 0.0)) return false;
  const double h = entropy(dist);
  return detail::in_band(std::abs(h + std::log(q)), h, params.epsilon);
}

struct FilterResult {
  ProbDist dist;
  std::size_t survivors = 0;
  bool fallback = false;  // no token was in band; the closest one was kept
};

/// Zeroes every token whose information lies outside
/// [Ent(q) - epsilon, Ent(q) + epsilon] and renormalizes the survivors. When
/// nothing survives, the token with the smallest |Ent(q) - I| is kept (lowest
/// id on ties). A distribution with no token removed is returned as is.
inline FilterResult filter_detailed(const ProbDist& dist, const FilterParams& params) {
  params.validate();
  const double h = entropy(dist);
  const auto& p = dist.vector();
  std::vector<double> kept(p.size(), 0.0);
  std::size_t survivors = 0;
  std::size_t support = 0;
  std::size_t closest = p.size();
  double closest_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0)) continue;
    ++support;
    const double gap = std::abs(h + std::log(p[i]));
    if (gap < closest_gap) {
      closest_gap = gap;
      closest = i;
    }
    if (detail::in_band(gap, h, params.epsilon)) {
      kept[i] = p[i];
      ++survivors;
    }
  }
  if (survivors == support) return {dist, survivors, false};
  if (survivors == 0) {
    return {ProbDist::one_hot(p.size(), static_cast<TokenId>(closest)), 1, true};
  }
  return {normalize(kept), survivors, false};
}

inline ProbDist filter(const ProbDist& dist, const FilterParams& params) {
  return filter_detailed(dist, params).dist;
}

}  // namespace ifdid
