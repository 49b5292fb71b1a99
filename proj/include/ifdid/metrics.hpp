#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "ifdid/error.hpp"
#include "ifdid/language_model.hpp"
#include "ifdid/vocabulary.hpp"

namespace ifdid {

namespace detail {

template <typename T>
std::map<std::vector<T>, std::size_t> ngram_counts(std::span<const T> text, std::size_t n) {
  std::map<std::vector<T>, std::size_t> counts;
  if (n == 0 || text.size() < n) return counts;
  for (std::size_t i = 0; i + n <= text.size(); ++i) {
    ++counts[std::vector<T>(text.begin() + static_cast<std::ptrdiff_t>(i),
                            text.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

inline void require_order(std::size_t n) {
  if (n < 1) throw ParameterError("n-gram order must be >= 1");
}

template <typename T>
std::size_t lcs_length(std::span<const T> a, std::span<const T> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Positions in `a` taking part in one longest common subsequence with `b`.
template <typename T>
std::set<std::size_t> lcs_positions(std::span<const T> a, std::span<const T> b) {
  std::vector<std::vector<std::size_t>> dp(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      dp[i][j] = a[i - 1] == b[j - 1] ? dp[i - 1][j - 1] + 1 : std::max(dp[i - 1][j], dp[i][j - 1]);
    }
  }
  std::set<std::size_t> hits;
  std::size_t i = a.size(), j = b.size();
  while (i > 0 && j > 0) {
    if (a[i - 1] == b[j - 1]) {
      hits.insert(i - 1);
      --i;
      --j;
    } else if (dp[i - 1][j] >= dp[i][j - 1]) {
      --i;
    } else {
      --j;
    }
  }
  return hits;
}

}  // namespace detail

/// Distinct n-grams over total n-grams across the corpus; 0 without n-grams.
template <typename T>
double dist_n(std::span<const std::vector<T>> texts, std::size_t n) {
  detail::require_order(n);
  std::set<std::vector<T>> distinct;
  std::size_t total = 0;
  for (const auto& text : texts) {
    for (auto& [gram, c] : detail::ngram_counts<T>(text, n)) {
      distinct.insert(gram);
      total += c;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(distinct.size()) / static_cast<double>(total);
}

/// Number of distinct n-grams across the corpus.
template <typename T>
std::size_t uniq_n(std::span<const std::vector<T>> texts, std::size_t n) {
  detail::require_order(n);
  std::set<std::vector<T>> distinct;
  for (const auto& text : texts) {
    for (auto& [gram, c] : detail::ngram_counts<T>(text, n)) distinct.insert(gram);
  }
  return distinct.size();
}

/// Fraction of duplicate n-grams within one text; 0 with fewer than n tokens.
template <typename T>
double rep_n(std::span<const T> text, std::size_t n) {
  detail::require_order(n);
  const auto counts = detail::ngram_counts<T>(text, n);
  if (counts.empty()) return 0.0;
  const std::size_t total = text.size() - n + 1;
  return 1.0 - static_cast<double>(counts.size()) / static_cast<double>(total);
}

struct BleuStats {
  std::vector<std::size_t> matches;  // clipped, index n-1
  std::vector<std::size_t> totals;
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
};

template <typename T>
BleuStats bleu_stats(std::span<const T> hyp, std::span<const std::vector<T>> refs, std::size_t max_n) {
  detail::require_order(max_n);
  BleuStats s;
  s.matches.assign(max_n, 0);
  s.totals.assign(max_n, 0);
  s.hyp_length = hyp.size();
  // closest reference length, shorter on ties
  bool have_ref = false;
  for (const auto& r : refs) {
    const auto diff = [&](std::size_t len) { return len > hyp.size() ? len - hyp.size() : hyp.size() - len; };
    if (!have_ref || diff(r.size()) < diff(s.ref_length) ||
        (diff(r.size()) == diff(s.ref_length) && r.size() < s.ref_length)) {
      s.ref_length = r.size();
      have_ref = true;
    }
  }
  for (std::size_t n = 1; n <= max_n; ++n) {
    const auto hyp_counts = detail::ngram_counts<T>(hyp, n);
    std::map<std::vector<T>, std::size_t> max_ref;
    for (const auto& r : refs) {
      for (auto& [gram, c] : detail::ngram_counts<T>(r, n)) {
        auto& m = max_ref[gram];
        m = std::max(m, c);
      }
    }
    for (const auto& [gram, c] : hyp_counts) {
      s.totals[n - 1] += c;
      auto it = max_ref.find(gram);
      if (it != max_ref.end()) s.matches[n - 1] += std::min(c, it->second);
    }
  }
  return s;
}

/// Geometric mean of clipped precisions times the brevity penalty. A zero
/// precision at n >= 2 is smoothed to (0 + 1) / (total + 1); a zero unigram
/// precision makes the score 0.
inline double bleu_from_stats(const BleuStats& s) {
  if (s.hyp_length == 0) return 0.0;
  double log_sum = 0.0;
  const std::size_t max_n = s.matches.size();
  for (std::size_t i = 0; i < max_n; ++i) {
    double m = static_cast<double>(s.matches[i]);
    double t = static_cast<double>(s.totals[i]);
    if (s.matches[i] == 0) {
      if (i == 0) return 0.0;
      m += 1.0;
      t += 1.0;
    }
    log_sum += std::log(m / t);
  }
  const double c = static_cast<double>(s.hyp_length);
  const double r = static_cast<double>(s.ref_length);
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return std::clamp(bp * std::exp(log_sum / static_cast<double>(max_n)), 0.0, 1.0);
}

template <typename T>
double bleu_n(std::span<const T> hyp, std::span<const std::vector<T>> refs, std::size_t max_n) {
  if (hyp.empty()) return 0.0;
  return bleu_from_stats(bleu_stats<T>(hyp, refs, max_n));
}

/// Corpus BLEU: statistics summed over all pairs before combining.
template <typename T>
double corpus_bleu(std::span<const std::vector<T>> hyps, std::span<const std::vector<std::vector<T>>> refs,
                   std::size_t max_n) {
  if (hyps.size() != refs.size()) throw ParameterError("corpus_bleu needs one reference list per hypothesis");
  BleuStats total;
  total.matches.assign(max_n, 0);
  total.totals.assign(max_n, 0);
  for (std::size_t k = 0; k < hyps.size(); ++k) {
    const auto s = bleu_stats<T>(hyps[k], refs[k], max_n);
    for (std::size_t i = 0; i < max_n; ++i) {
      total.matches[i] += s.matches[i];
      total.totals[i] += s.totals[i];
    }
    total.hyp_length += s.hyp_length;
    total.ref_length += s.ref_length;
  }
  return bleu_from_stats(total);
}

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  friend bool operator==(const PRF&, const PRF&) = default;
};

namespace detail {

inline PRF make_prf(double overlap, double hyp_total, double ref_total) {
  PRF out;
  out.precision = hyp_total > 0.0 ? overlap / hyp_total : 0.0;
  out.recall = ref_total > 0.0 ? overlap / ref_total : 0.0;
  const double s = out.precision + out.recall;
  out.f1 = s > 0.0 ? 2.0 * out.precision * out.recall / s : 0.0;
  return out;
}

}  // namespace detail

/// Clipped n-gram overlap. Two identical texts too short to hold an n-gram
/// score (1, 1, 1); otherwise a side without n-grams scores 0.
template <typename T>
PRF rouge_n(std::span<const T> hyp, std::span<const T> ref, std::size_t n) {
  detail::require_order(n);
  const auto h = detail::ngram_counts<T>(hyp, n);
  const auto r = detail::ngram_counts<T>(ref, n);
  if (h.empty() && r.empty() && !hyp.empty() && std::equal(hyp.begin(), hyp.end(), ref.begin(), ref.end())) {
    return {1.0, 1.0, 1.0};
  }
  std::size_t overlap = 0, ht = 0, rt = 0;
  for (const auto& [g, c] : h) {
    ht += c;
    auto it = r.find(g);
    if (it != r.end()) overlap += std::min(c, it->second);
  }
  for (const auto& [g, c] : r) rt += c;
  return detail::make_prf(static_cast<double>(overlap), static_cast<double>(ht), static_cast<double>(rt));
}

/// Longest-common-subsequence ROUGE over whole texts.
template <typename T>
PRF rouge_l(std::span<const T> hyp, std::span<const T> ref) {
  const auto lcs = detail::lcs_length<T>(hyp, ref);
  return detail::make_prf(static_cast<double>(lcs), static_cast<double>(hyp.size()), static_cast<double>(ref.size()));
}

/// Summary-level ROUGE-L for texts with explicit sentence boundaries: for
/// each reference sentence, the union of its LCS hits against every
/// hypothesis sentence.
template <typename T>
PRF rouge_l_union(std::span<const std::vector<T>> hyp_sentences, std::span<const std::vector<T>> ref_sentences) {
  std::size_t hits = 0, hyp_len = 0, ref_len = 0;
  for (const auto& c : hyp_sentences) hyp_len += c.size();
  for (const auto& r : ref_sentences) {
    ref_len += r.size();
    std::set<std::size_t> merged;
    for (const auto& c : hyp_sentences) {
      const auto pos = detail::lcs_positions<T>(r, c);
      merged.insert(pos.begin(), pos.end());
    }
    hits += merged.size();
  }
  return detail::make_prf(static_cast<double>(hits), static_cast<double>(hyp_len), static_cast<double>(ref_len));
}

/// Fraction of input pieces appearing as a contiguous run in `hyp`.
template <typename T>
double coverage(std::span<const T> hyp, std::span<const std::vector<T>> pieces) {
  std::size_t counted = 0, present = 0;
  for (const auto& piece : pieces) {
    if (piece.empty()) continue;
    ++counted;
    if (std::search(hyp.begin(), hyp.end(), piece.begin(), piece.end()) != hyp.end()) ++present;
  }
  return counted == 0 ? 0.0 : static_cast<double>(present) / static_cast<double>(counted);
}

/// Sum of per-step log probabilities under any LanguageModel.
template <LanguageModel M>
double sequence_logprob(M& lm, std::span<const TokenId> tokens) {
  if (tokens.empty()) throw ParameterError("sequence_logprob needs a nonempty sequence");
  double total = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const ProbDist q = lm.next_distribution(tokens.first(i));
    total += std::log(q.at(tokens[i]));
  }
  return total;
}

/// exp(-total log-likelihood / total tokens). Empty texts are skipped.
template <LanguageModel M>
double perplexity(M& lm, std::span<const std::vector<TokenId>> texts) {
  double log_likelihood = 0.0;
  std::size_t count = 0;
  for (const auto& text : texts) {
    if (text.empty()) continue;
    log_likelihood += sequence_logprob(lm, std::span<const TokenId>(text));
    count += text.size();
  }
  if (count == 0) throw ParameterError("perplexity needs at least one token");
  return std::exp(-log_likelihood / static_cast<double>(count));
}

// Overloads for plain vectors, where span deduction does not apply.

template <typename T>
double dist_n(const std::vector<std::vector<T>>& texts, std::size_t n) {
  return dist_n<T>(std::span<const std::vector<T>>(texts), n);
}
template <typename T>
std::size_t uniq_n(const std::vector<std::vector<T>>& texts, std::size_t n) {
  return uniq_n<T>(std::span<const std::vector<T>>(texts), n);
}
template <typename T>
double rep_n(const std::vector<T>& text, std::size_t n) {
  return rep_n<T>(std::span<const T>(text), n);
}
template <typename T>
double bleu_n(const std::vector<T>& hyp, const std::vector<std::vector<T>>& refs, std::size_t max_n) {
  return bleu_n<T>(std::span<const T>(hyp), std::span<const std::vector<T>>(refs), max_n);
}
template <typename T>
PRF rouge_n(const std::vector<T>& hyp, const std::vector<T>& ref, std::size_t n) {
  return rouge_n<T>(std::span<const T>(hyp), std::span<const T>(ref), n);
}
template <typename T>
PRF rouge_l(const std::vector<T>& hyp, const std::vector<T>& ref) {
  return rouge_l<T>(std::span<const T>(hyp), std::span<const T>(ref));
}
template <typename T>
double coverage(const std::vector<T>& hyp, const std::vector<std::vector<T>>& pieces) {
  return coverage<T>(std::span<const T>(hyp), std::span<const std::vector<T>>(pieces));
}

}  // namespace ifdid
