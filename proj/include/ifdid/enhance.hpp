#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ifdid/embeddings.hpp"
#include "ifdid/error.hpp"
#include "ifdid/prob_dist.hpp"
#include "ifdid/vocabulary.hpp"

namespace ifdid {

using TokenSet = std::set<TokenId>;

/// h(gamma) = tan(pi * gamma / 2). Strictly increasing on (0, 1), h(0.5) = 1.
inline double activation(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("gamma must lie strictly inside (0, 1)");
  if (gamma == 0.5) return 1.0;
  return std::tan(std::numbers::pi * gamma / 2.0);
}

struct GammaParams {
  double gamma_topic = 0.4;
  double gamma_sentence = 0.9;
  double gamma_rep = 0.99;

  void validate() const {
    activation(gamma_topic);
    activation(gamma_sentence);
    activation(gamma_rep);
  }
};

// How mass removed from (or added to) T is taken from the tokens outside
// F and T. `proportional` rescales them by one common factor and keeps the
// vector normalized. `literal_additive` adds (p_T - p*_T) / p_rest to each
// of them as the formula is printed, floors at zero and renormalizes the
// whole vector; it exists for comparison only.
enum class Redistribution { proportional, literal_additive };

struct GammaResult {
  ProbDist dist;
  TokenSet frozen;
};

namespace detail {

inline void check_ids(const TokenSet& ids, std::size_t n, const char* what) {
  if (!ids.empty() && (*ids.begin() < 0 || static_cast<std::size_t>(*ids.rbegin()) >= n)) {
    throw ParameterError(std::string(what) + " contains an out-of-range token id");
  }
}

}  // namespace detail

/// Moves the total mass of T from p_T to p_T^h * (1 - p_F)^(1 - h), scaling
/// members of T proportionally. Tokens in F keep their exact values; the
/// returned frozen set is F u T.
inline GammaResult gamma_transform(const ProbDist& dist, const TokenSet& typical, const TokenSet& frozen,
                                   double gamma, Redistribution rule = Redistribution::proportional) {
  const double h = activation(gamma);
  detail::check_ids(typical, dist.size(), "typical set");
  detail::check_ids(frozen, dist.size(), "frozen set");
  for (TokenId t : typical) {
    if (frozen.count(t)) throw SetOverlapError("typical and frozen sets overlap at token " + std::to_string(t));
  }
  TokenSet next_frozen = frozen;
  next_frozen.insert(typical.begin(), typical.end());

  const auto& p = dist.vector();
  std::vector<double> in_t;
  std::vector<double> in_rest;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    if (typical.count(id)) {
      in_t.push_back(p[i]);
    } else if (!frozen.count(id)) {
      in_rest.push_back(p[i]);
    }
  }
  const double p_t = compensated_sum(in_t);
  const double p_c = compensated_sum(in_rest);
  if (!(p_t > 0.0)) return {dist, std::move(next_frozen)};

  // 1 - p_F measured directly as p_T + p_c, so p*_T can never exceed it.
  const double unfrozen = p_t + p_c;
  const double p_t_star = h == 1.0 ? p_t : unfrozen * std::pow(p_t / unfrozen, h);
  if (p_t_star == p_t) return {dist, std::move(next_frozen)};
  if (!(p_c > 0.0)) return {dist, std::move(next_frozen)};

  std::vector<double> out = p;
  const double t_scale = p_t_star / p_t;
  if (rule == Redistribution::proportional) {
    const double c_scale = std::max(unfrozen - p_t_star, 0.0) / p_c;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const auto id = static_cast<TokenId>(i);
      if (typical.count(id)) {
        out[i] = std::min(p[i] * t_scale, 1.0);
      } else if (!frozen.count(id)) {
        out[i] = std::min(p[i] * c_scale, 1.0);
      }
    }
    return {ProbDist(std::move(out)), std::move(next_frozen)};
  }
  const double shift = (p_t - p_t_star) / p_c;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    if (typical.count(id)) {
      out[i] = p[i] * t_scale;
    } else if (!frozen.count(id)) {
      out[i] = std::max(p[i] + shift, 0.0);
    }
  }
  return {normalize(out), std::move(next_frozen)};
}

struct TypicalSets {
  TokenSet theme;
  TokenSet terminal;
  TokenSet repeated;
};

enum class TypicalKind { repeated, theme, terminal };
using EnhanceOrder = std::array<TypicalKind, 3>;
inline constexpr EnhanceOrder kDefaultEnhanceOrder{TypicalKind::repeated, TypicalKind::theme, TypicalKind::terminal};

/// Three chained gamma transforms sharing one frozen set, which starts
/// empty each call. Ids frozen by an earlier pass are skipped by later ones.
inline ProbDist enhance_step(const ProbDist& dist, const TypicalSets& sets, const GammaParams& params,
                             const EnhanceOrder& order = kDefaultEnhanceOrder,
                             Redistribution rule = Redistribution::proportional) {
  params.validate();
  ProbDist current = dist;
  TokenSet frozen;
  for (TypicalKind kind : order) {
    const TokenSet* set = nullptr;
    double gamma = 0.5;
    switch (kind) {
      case TypicalKind::repeated:
        set = &sets.repeated;
        gamma = params.gamma_rep;
        break;
      case TypicalKind::theme:
        set = &sets.theme;
        gamma = params.gamma_topic;
        break;
      case TypicalKind::terminal:
        set = &sets.terminal;
        gamma = params.gamma_sentence;
        break;
    }
    TokenSet pruned;
    for (TokenId t : *set) {
      if (!frozen.count(t)) pruned.insert(t);
    }
    auto result = gamma_transform(current, pruned, frozen, gamma, rule);
    current = std::move(result.dist);
    frozen = std::move(result.frozen);
  }
  return current;
}

enum class ThemeMode { verbatim, simi };

/// Union of the input pieces' tokens. In simi mode each piece also
/// contributes the `top_n` nearest tokens to its mean embedding, drawn from
/// tokens outside `exclude` and outside the pieces themselves.
inline TokenSet build_theme_set(std::span<const std::vector<TokenId>> pieces, ThemeMode mode,
                                const EmbeddingTable* emb = nullptr, std::size_t top_n = 0,
                                const TokenSet& exclude = {}) {
  if (pieces.empty()) throw ParameterError("theme set needs at least one input piece");
  TokenSet theme;
  for (const auto& piece : pieces) theme.insert(piece.begin(), piece.end());
  if (mode == ThemeMode::verbatim) return theme;
  if (emb == nullptr) throw ParameterError("simi theme set needs an embedding table");
  if (top_n < 1) throw ParameterError("top_n must be >= 1");
  TokenSet skip = exclude;
  skip.insert(theme.begin(), theme.end());
  TokenSet expanded = theme;
  for (const auto& piece : pieces) {
    if (piece.empty()) continue;
    const auto query = average_embedding(piece, *emb);
    for (const auto& nb : nearest(*emb, query, top_n, skip)) expanded.insert(nb.id);
  }
  return expanded;
}

inline const std::vector<std::string>& default_terminal_tokens() {
  static const std::vector<std::string> tokens{".", "!", "?"};
  return tokens;
}

/// EOS plus whichever of '.', '!', '?' and `extra` the vocabulary contains.
inline TokenSet build_terminal_set(const Vocabulary& vocab, std::span<const std::string> extra = {}) {
  TokenSet out{Vocabulary::kEos};
  for (const auto& t : default_terminal_tokens()) {
    if (vocab.contains(t)) out.insert(vocab.id(t));
  }
  for (const auto& t : extra) {
    if (vocab.contains(t)) out.insert(vocab.id(t));
  }
  return out;
}

inline TokenSet build_repeated_set(std::span<const TokenId> emitted) {
  return TokenSet(emitted.begin(), emitted.end());
}

struct SimiParams {
  double lambda = 0.0005;
  std::size_t top_n = 350;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("simi lambda must be >= 0");
    if (top_n < 1) throw ParameterError("simi top_n must be >= 1");
  }
};

/// prob_i += lambda * cos(piece_embedding, emb(i)) for every theme token,
/// floored at zero, then renormalized.
inline ProbDist simi_enhance(const ProbDist& dist, const TokenSet& theme, std::span<const double> piece_embedding,
                             const EmbeddingTable& emb, const SimiParams& params) {
  params.validate();
  if (theme.empty()) throw ParameterError("simi_enhance needs a nonempty theme set");
  detail::check_ids(theme, dist.size(), "theme set");
  if (params.lambda == 0.0) return dist;
  std::vector<double> w = dist.vector();
  for (TokenId t : theme) {
    auto& x = w[static_cast<std::size_t>(t)];
    x = std::max(x + params.lambda * cosine(piece_embedding, emb.vector(t)), 0.0);
  }
  if (compensated_sum(w) <= 0.0) return dist;  // every supported token floored away
  return normalize(w);
}

}  // namespace ifdid
