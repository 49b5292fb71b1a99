#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "ifdid/embeddings.hpp"
#include "ifdid/enhance.hpp"
#include "ifdid/info_filter.hpp"
#include "ifdid/prob_dist.hpp"
#include "ifdid/rng.hpp"

namespace ifdid {

// Per-step selection rules. The *_distribution functions expose the
// distribution each rule samples from; step_* functions draw from it.

/// Argmax, lowest id on ties.
inline TokenId step_greedy(const ProbDist& dist) {
  const auto& p = dist.vector();
  return static_cast<TokenId>(std::max_element(p.begin(), p.end()) - p.begin());
}

/// normalize(q^(1/t)), computed relative to the maximum in log space.
inline ProbDist temperature_distribution(const ProbDist& dist, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError("temperature must be > 0");
  if (t == 1.0) return dist;
  const auto& p = dist.vector();
  const double log_max = std::log(*std::max_element(p.begin(), p.end()));
  std::vector<double> w(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) w[i] = std::exp((std::log(p[i]) - log_max) / t);
  }
  return normalize(w);
}

namespace detail {

// Ids ordered by descending probability, ascending id on ties.
inline std::vector<std::size_t> rank_by_probability(const ProbDist& dist) {
  const auto& p = dist.vector();
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  return order;
}

inline ProbDist keep_only(const ProbDist& dist, std::span<const std::size_t> ids) {
  std::vector<double> w(dist.size(), 0.0);
  for (std::size_t i : ids) w[i] = dist.vector()[i];
  return normalize(w);
}

}  // namespace detail

inline ProbDist top_k_distribution(const ProbDist& dist, std::size_t k) {
  if (k < 1 || k > dist.size()) throw ParameterError("top_k must lie in [1, |V|]");
  const auto order = detail::rank_by_probability(dist);
  return detail::keep_only(dist, std::span(order).first(k));
}

/// Smallest probability-ranked prefix whose mass reaches p.
inline ProbDist nucleus_distribution(const ProbDist& dist, double top_p) {
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ParameterError("top_p must lie in (0, 1]");
  const auto order = detail::rank_by_probability(dist);
  double cum = 0.0;
  std::size_t keep = 0;
  while (keep < order.size()) {
    cum += dist.vector()[order[keep]];
    ++keep;
    if (cum >= top_p) break;
  }
  return detail::keep_only(dist, std::span(order).first(keep));
}

inline TokenId step_temperature(const ProbDist& dist, double t, Rng& rng) {
  return sample(temperature_distribution(dist, t), rng);
}

inline TokenId step_topk(const ProbDist& dist, std::size_t k, Rng& rng) {
  return sample(top_k_distribution(dist, k), rng);
}

inline TokenId step_nucleus(const ProbDist& dist, double top_p, Rng& rng) {
  return sample(nucleus_distribution(dist, top_p), rng);
}

/// Options shared by the gamma family.
struct EnhanceOptions {
  std::optional<ExtremenessPolicy> clamp = ExtremenessPolicy{};
  EnhanceOrder order = kDefaultEnhanceOrder;
  Redistribution rule = Redistribution::proportional;
};

inline ProbDist gamma_distribution(const ProbDist& dist, const TypicalSets& sets, const GammaParams& params,
                                   const EnhanceOptions& opts = {}) {
  const ProbDist base = opts.clamp ? clamp_extremes(dist, *opts.clamp) : dist;
  return enhance_step(base, sets, params, opts.order, opts.rule);
}

/// clamp -> enhance -> filter.
inline FilterResult ifdid_distribution(const ProbDist& dist, const TypicalSets& sets, const GammaParams& params,
                                       const FilterParams& filter_params, const EnhanceOptions& opts = {}) {
  return filter_detailed(gamma_distribution(dist, sets, params, opts), filter_params);
}

/// clamp -> gamma(repeated) -> similarity map over theme -> gamma(terminal)
/// -> filter. The frozen set carries across the three enhance passes.
inline FilterResult ifdid_simi_distribution(const ProbDist& dist, const TypicalSets& sets,
                                            std::span<const double> piece_embedding, const EmbeddingTable& emb,
                                            const GammaParams& params, const SimiParams& simi,
                                            const FilterParams& filter_params, const EnhanceOptions& opts = {}) {
  params.validate();
  ProbDist current = opts.clamp ? clamp_extremes(dist, *opts.clamp) : dist;
  auto rep = gamma_transform(current, sets.repeated, {}, params.gamma_rep, opts.rule);
  current = std::move(rep.dist);
  TokenSet frozen = std::move(rep.frozen);
  TokenSet theme;
  for (TokenId t : sets.theme) {
    if (!frozen.count(t)) theme.insert(t);
  }
  if (!theme.empty()) current = simi_enhance(current, theme, piece_embedding, emb, simi);
  frozen.insert(theme.begin(), theme.end());
  TokenSet terminal;
  for (TokenId t : sets.terminal) {
    if (!frozen.count(t)) terminal.insert(t);
  }
  current = gamma_transform(current, terminal, frozen, params.gamma_sentence, opts.rule).dist;
  return filter_detailed(current, filter_params);
}

inline TokenId step_gamma(const ProbDist& dist, const TypicalSets& sets, const GammaParams& params, Rng& rng,
                          const std::optional<ExtremenessPolicy>& policy = ExtremenessPolicy{}) {
  return sample(gamma_distribution(dist, sets, params, {policy}), rng);
}

inline TokenId step_ifdid(const ProbDist& dist, const TypicalSets& sets, const GammaParams& params,
                          const FilterParams& filter_params, Rng& rng,
                          const std::optional<ExtremenessPolicy>& policy = ExtremenessPolicy{}) {
  return sample(ifdid_distribution(dist, sets, params, filter_params, {policy}).dist, rng);
}

inline TokenId step_ifdid_simi(const ProbDist& dist, const TypicalSets& sets, std::span<const double> piece_embedding,
                               const EmbeddingTable& emb, const GammaParams& params, const SimiParams& simi,
                               const FilterParams& filter_params, Rng& rng,
                               const std::optional<ExtremenessPolicy>& policy = ExtremenessPolicy{}) {
  return sample(ifdid_simi_distribution(dist, sets, piece_embedding, emb, params, simi, filter_params, {policy}).dist,
                rng);
}

}  // namespace ifdid
