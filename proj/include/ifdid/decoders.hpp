#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ifdid/beam_search.hpp"
#include "ifdid/decode_config.hpp"
#include "ifdid/embeddings.hpp"
#include "ifdid/enhance.hpp"
#include "ifdid/language_model.hpp"
#include "ifdid/rng.hpp"
#include "ifdid/steps.hpp"

namespace ifdid {

/// Builds theme and terminal sets for one prompt. The simi strategy expands
/// the theme with near-synonyms (never specials or terminal tokens) and
/// uses the mean embedding of all input-piece tokens as emb(I).
inline Guidance make_guidance(const DecodeConfig& cfg, const Vocabulary& vocab, const EmbeddingTable* emb = nullptr,
                              std::span<const std::string> extra_terminals = {}) {
  Guidance g;
  g.terminal = build_terminal_set(vocab, extra_terminals);
  g.embeddings = emb;
  std::vector<std::vector<TokenId>> pieces;
  std::vector<TokenId> all_piece_tokens;
  for (const auto& piece : cfg.input_pieces) {
    if (piece.empty()) continue;
    pieces.push_back(piece);
    all_piece_tokens.insert(all_piece_tokens.end(), piece.begin(), piece.end());
  }
  if (pieces.empty()) return g;
  if (cfg.strategy == Strategy::ifdid_simi) {
    if (emb == nullptr) throw ParameterError("ifdid_simi needs an embedding table");
    TokenSet exclude = g.terminal;
    exclude.insert({Vocabulary::kBos, Vocabulary::kEos, Vocabulary::kUnk});
    g.theme = build_theme_set(pieces, ThemeMode::simi, emb, cfg.simi.top_n, exclude);
    g.piece_embedding = average_embedding(all_piece_tokens, *emb);
  } else {
    g.theme = build_theme_set(pieces, ThemeMode::verbatim);
  }
  return g;
}

namespace detail {

struct Choice {
  TokenId token;
  std::size_t survivors;
};

inline TokenId draw(const ProbDist& dist, Rng& rng, SurvivorSampling mode) {
  return mode == SurvivorSampling::uniform ? sample_support_uniformly(dist, rng) : sample(dist, rng);
}

inline Choice choose(const ProbDist& q, const DecodeConfig& cfg, const Guidance& guidance,
                     std::span<const TokenId> emitted, Rng& rng) {
  switch (cfg.strategy) {
    case Strategy::greedy:
      return {step_greedy(q), 1};
    case Strategy::temperature: {
      auto d = temperature_distribution(q, cfg.temperature);
      return {sample(d, rng), d.support_size()};
    }
    case Strategy::top_k: {
      auto d = top_k_distribution(q, cfg.top_k);
      return {sample(d, rng), d.support_size()};
    }
    case Strategy::nucleus: {
      auto d = nucleus_distribution(q, cfg.top_p);
      return {sample(d, rng), d.support_size()};
    }
    default:
      break;
  }
  EnhanceOptions opts;
  opts.clamp = cfg.clamps() ? std::optional(cfg.extremeness) : std::nullopt;
  opts.order = cfg.enhance_order;
  opts.rule = cfg.redistribution;
  const TypicalSets sets{guidance.theme, guidance.terminal, build_repeated_set(emitted)};
  if (cfg.strategy == Strategy::gamma) {
    auto d = gamma_distribution(q, sets, cfg.gamma, opts);
    return {sample(d, rng), d.support_size()};
  }
  FilterResult filtered = cfg.strategy == Strategy::ifdid
                              ? ifdid_distribution(q, sets, cfg.gamma, cfg.filter, opts)
                              : ifdid_simi_distribution(q, sets, guidance.piece_embedding,
                                                        guidance.embeddings ? *guidance.embeddings : EmbeddingTable{},
                                                        cfg.gamma, cfg.simi, cfg.filter, opts);
  return {draw(filtered.dist, rng, cfg.survivor_sampling), filtered.survivors};
}

}  // namespace detail

/// Autoregressive generation: query the model, pick a token with the
/// configured strategy, append, stop on EOS or after max_length tokens.
/// Deterministic in (model, cfg, guidance).
template <LanguageModel M>
DecodeRecord decode(M& lm, const DecodeConfig& cfg, const Guidance& guidance = {}) {
  if (cfg.strategy == Strategy::beam) return beam_decode(lm, cfg);
  const std::size_t vocab_size = lm.vocab_size();
  cfg.validate(vocab_size);
  if (cfg.strategy == Strategy::ifdid_simi && !guidance.theme.empty()) {
    if (guidance.embeddings == nullptr) throw ParameterError("ifdid_simi needs an embedding table");
    if (guidance.piece_embedding.size() != guidance.embeddings->dim()) {
      throw ParameterError("piece embedding dimension does not match the embedding table");
    }
  }

  Rng rng(cfg.seed, cfg.stream);
  DecodeRecord rec;
  std::vector<TokenId> context = cfg.prompt;
  for (std::size_t step = 0; step < cfg.max_length; ++step) {
    const ProbDist q = lm.next_distribution(context);
    if (q.size() != vocab_size) throw ParameterError("model returned a distribution of the wrong size");
    const auto choice = detail::choose(q, cfg, guidance, rec.tokens, rng);
    const double p = q[choice.token];
    rec.steps.push_back(
        {entropy(q), p > 0.0 ? -std::log(p) : std::numeric_limits<double>::infinity(), choice.survivors});
    rec.tokens.push_back(choice.token);
    context.push_back(choice.token);
    if (choice.token == Vocabulary::kEos) {
      rec.termination = Termination::eos;
      return rec;
    }
  }
  rec.termination = Termination::max_length;
  return rec;
}

}  // namespace ifdid
