#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ifdid/error.hpp"
#include "ifdid/vocabulary.hpp"

namespace ifdid {

inline constexpr double kSumTolerance = 1e-9;

// Neumaier-compensated sum.
inline double compensated_sum(std::span<const double> xs) {
  double sum = 0.0;
  double carry = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      carry += (sum - t) + x;
    } else {
      carry += (x - t) + sum;
    }
    sum = t;
  }
  return sum + carry;
}

/// A normalized probability vector indexed by TokenId. Construction checks
/// that every entry lies in [0, 1] and that the entries sum to 1 within
/// kSumTolerance; a ProbDist that exists is valid.
class ProbDist {
 public:
  explicit ProbDist(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw InvalidWeightsError("empty distribution");
    for (std::size_t i = 0; i < probs_.size(); ++i) {
      const double p = probs_[i];
      if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidWeightsError("probability out of [0,1] at index " + std::to_string(i) + ": " +
                                  std::to_string(p));
      }
    }
    const double s = compensated_sum(probs_);
    if (std::abs(s - 1.0) > kSumTolerance) {
      throw InvalidWeightsError("probabilities sum to " + std::to_string(s));
    }
  }

  static ProbDist uniform(std::size_t n) { return ProbDist(std::vector<double>(n, 1.0 / static_cast<double>(n))); }

  static ProbDist one_hot(std::size_t n, TokenId t) {
    std::vector<double> v(n, 0.0);
    v.at(static_cast<std::size_t>(t)) = 1.0;
    return ProbDist(std::move(v));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](TokenId t) const { return probs_[static_cast<std::size_t>(t)]; }
  double at(TokenId t) const {
    if (t < 0 || static_cast<std::size_t>(t) >= probs_.size()) {
      throw ParameterError("token id out of range: " + std::to_string(t));
    }
    return probs_[static_cast<std::size_t>(t)];
  }
  std::span<const double> probs() const noexcept { return probs_; }
  const std::vector<double>& vector() const noexcept { return probs_; }

  std::size_t support_size() const noexcept {
    std::size_t n = 0;
    for (double p : probs_) n += p > 0.0;
    return n;
  }

  friend bool operator==(const ProbDist& a, const ProbDist& b) { return a.probs_ == b.probs_; }

 private:
  std::vector<double> probs_;
};

/// Scales nonnegative weights to sum to 1. Zero entries stay zero.
inline ProbDist normalize(std::span<const double> weights) {
  if (weights.empty()) throw InvalidWeightsError("empty weight vector");
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw InvalidWeightsError("invalid weight at index " + std::to_string(i));
    }
  }
  const double total = compensated_sum(weights);
  if (!(total > 0.0)) throw InvalidWeightsError("weights have no positive entry");
  std::vector<double> out(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double p = weights[i] / total;
    out[i] = p > 1.0 ? 1.0 : p;
  }
  return ProbDist(std::move(out));
}

inline ProbDist normalize(const std::vector<double>& weights) {
  return normalize(std::span<const double>(weights));
}

struct ExtremenessPolicy {
  double threshold = 1e-6;

  void validate() const {
    if (!(threshold > 0.0 && threshold < 0.5)) {
      throw ParameterError("extremeness threshold must lie in (0, 0.5)");
    }
  }
};

/// Moves entries in (0, threshold) up to the threshold and entries above
/// 1 - threshold down to it, keeping the vector normalized. Renormalizing
/// can push further entries out of bounds, so the result is the fixed point
/// of clamp-then-renormalize: q_i = clip(c * p_i, lo, hi) on the support,
/// with the one scale c that makes q sum to 1. The sum is monotone in c, so
/// bisection on log c finds which entries end up on a bound and c is then solved
/// exactly from the free mass. Exact zeros stay zero. When the bounds cannot
/// all hold (support * threshold > 1) the clipped vector is renormalized,
/// which makes the support uniform.
inline ProbDist clamp_extremes(const ProbDist& dist, const ExtremenessPolicy& policy = {}) {
  policy.validate();
  const double lo = policy.threshold;
  const double hi = 1.0 - policy.threshold;
  const auto& p = dist.vector();
  if (std::none_of(p.begin(), p.end(), [&](double q) { return (q > 0.0 && q < lo) || q > hi; })) return dist;

  double p_min = 1.0;
  double p_max = 0.0;
  for (double q : p) {
    if (q > 0.0) {
      p_min = std::min(p_min, q);
      p_max = std::max(p_max, q);
    }
  }
  const auto clipped_sum = [&](double c) {
    std::vector<double> terms;
    for (double q : p) {
      if (q > 0.0) terms.push_back(std::clamp(c * q, lo, hi));
    }
    return compensated_sum(terms);
  };
  // every entry sits on lo at c_lo and on hi at c_hi
  double c_lo = lo / p_max;
  double c_hi = hi / p_min;
  for (int iter = 0; iter < 200 && c_lo < c_hi; ++iter) {
    const double mid = std::sqrt(c_lo) * std::sqrt(c_hi);
    if (mid <= c_lo || mid >= c_hi) break;
    (clipped_sum(mid) < 1.0 ? c_lo : c_hi) = mid;
  }
  double c = std::sqrt(c_lo) * std::sqrt(c_hi);

  std::vector<double> free_mass;
  double fixed = 0.0;
  for (double q : p) {
    if (!(q > 0.0)) continue;
    const double v = c * q;
    if (v <= lo) {
      fixed += lo;
    } else if (v >= hi) {
      fixed += hi;
    } else {
      free_mass.push_back(q);
    }
  }
  const double s = compensated_sum(free_mass);
  if (s > 0.0 && fixed < 1.0) c = (1.0 - fixed) / s;

  std::vector<double> out(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) out[i] = std::clamp(c * p[i], lo, hi);
  }
  return normalize(out);
}

/// Shannon entropy in nats; 0 log 0 = 0.
inline double entropy(const ProbDist& dist) {
  std::vector<double> terms;
  terms.reserve(dist.size());
  for (double q : dist.probs()) {
    if (q > 0.0) terms.push_back(-q * std::log(q));
  }
  const double h = compensated_sum(terms);
  return h < 0.0 ? 0.0 : h;
}

/// Surprisal -ln q(t) in nats.
inline double information(const ProbDist& dist, TokenId t) {
  const double q = dist.at(t);
  if (!(q > 0.0)) {
    throw UndefinedInformationError("information undefined for zero-probability token " + std::to_string(t));
  }
  return -std::log(q);
}

}  // namespace ifdid
