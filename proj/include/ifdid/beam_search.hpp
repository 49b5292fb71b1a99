#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <span>
#include <vector>

#include "ifdid/decode_config.hpp"
#include "ifdid/language_model.hpp"

namespace ifdid {

/// Tokens that would complete an n-gram already present in `history`.
inline std::set<TokenId> banned_next_tokens(std::span<const TokenId> history, std::size_t n) {
  std::set<TokenId> banned;
  if (n == 0 || history.size() + 1 < n) return banned;
  const std::size_t prefix = n - 1;
  const auto tail = history.last(prefix);
  for (std::size_t i = 0; i + n <= history.size(); ++i) {
    if (std::equal(tail.begin(), tail.end(), history.begin() + static_cast<std::ptrdiff_t>(i))) {
      banned.insert(history[i + prefix]);
    }
  }
  return banned;
}

namespace detail {

struct Hypothesis {
  std::vector<TokenId> tokens;
  double logprob = 0.0;

  double normalized() const { return logprob / static_cast<double>(tokens.size()); }
};

template <LanguageModel M>
DecodeRecord record_path(M& lm, const DecodeConfig& cfg, const std::vector<TokenId>& tokens) {
  DecodeRecord rec;
  std::vector<TokenId> context = cfg.prompt;
  for (TokenId t : tokens) {
    const ProbDist q = lm.next_distribution(context);
    const double p = q.at(t);
    rec.steps.push_back({entropy(q), p > 0.0 ? -std::log(p) : std::numeric_limits<double>::infinity(),
                         q.support_size()});
    rec.tokens.push_back(t);
    context.push_back(t);
  }
  rec.termination = (!tokens.empty() && tokens.back() == Vocabulary::kEos) ? Termination::eos : Termination::max_length;
  return rec;
}

}  // namespace detail

/// Beam search over cumulative log probability. Each step keeps the best
/// beam_size expansions (ties: lexicographically smaller sequence); an
/// expansion ending in EOS or reaching max_length is complete and still
/// occupies its slot that step. Expansions that would repeat an n-gram of
/// size no_repeat_ngram_n (prompt included) are discarded. The result is the
/// complete hypothesis with the best length-normalized log probability.
template <LanguageModel M>
DecodeRecord beam_decode(M& lm, const DecodeConfig& cfg) {
  cfg.validate(lm.vocab_size());
  if (cfg.strategy != Strategy::beam) throw ParameterError("beam_decode needs the beam strategy");

  auto better = [](const detail::Hypothesis& a, const detail::Hypothesis& b) {
    if (a.logprob != b.logprob) return a.logprob > b.logprob;
    return a.tokens < b.tokens;
  };

  std::vector<detail::Hypothesis> alive{detail::Hypothesis{}};
  std::vector<detail::Hypothesis> complete;
  for (std::size_t step = 0; step < cfg.max_length && !alive.empty(); ++step) {
    std::vector<detail::Hypothesis> candidates;
    for (const auto& hyp : alive) {
      std::vector<TokenId> context = cfg.prompt;
      context.insert(context.end(), hyp.tokens.begin(), hyp.tokens.end());
      const ProbDist q = lm.next_distribution(context);
      const auto banned = banned_next_tokens(context, cfg.no_repeat_ngram_n);
      for (std::size_t i = 0; i < q.size(); ++i) {
        const auto t = static_cast<TokenId>(i);
        if (!(q.vector()[i] > 0.0) || banned.count(t)) continue;
        detail::Hypothesis next{hyp.tokens, hyp.logprob + std::log(q.vector()[i])};
        next.tokens.push_back(t);
        candidates.push_back(std::move(next));
      }
    }
    if (candidates.empty()) {
      // nothing can be extended; the survivors end here
      for (auto& h : alive) {
        if (!h.tokens.empty()) complete.push_back(std::move(h));
      }
      alive.clear();
      break;
    }
    const std::size_t keep = std::min(cfg.beam_size, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      better);
    candidates.resize(keep);
    alive.clear();
    for (auto& c : candidates) {
      if (c.tokens.back() == Vocabulary::kEos || c.tokens.size() >= cfg.max_length) {
        complete.push_back(std::move(c));
      } else {
        alive.push_back(std::move(c));
      }
    }
  }
  if (complete.empty()) return detail::record_path(lm, cfg, {});
  const auto best = std::min_element(complete.begin(), complete.end(), [](const auto& a, const auto& b) {
    const double sa = a.normalized();
    const double sb = b.normalized();
    if (sa != sb) return sa > sb;
    return a.tokens < b.tokens;
  });
  return detail::record_path(lm, cfg, best->tokens);
}

}  // namespace ifdid
