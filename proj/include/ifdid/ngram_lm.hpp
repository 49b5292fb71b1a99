#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include "ifdid/error.hpp"
#include "ifdid/language_model.hpp"
#include "ifdid/prob_dist.hpp"
#include "ifdid/vocabulary.hpp"

namespace ifdid {

struct AddK {
  double k = 0.01;
};

// weights[0] is the uniform floor, weights[j] the maximum-likelihood estimate
// with j-1 tokens of context. Weights of unseen contexts are dropped and the
// rest renormalized.
struct Interpolated {
  std::vector<double> weights;
};

using Smoothing = std::variant<AddK, Interpolated>;

namespace detail {

inline std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw ParameterError("cannot format number");
  return std::string(buf, end);
}

inline double parse_double(std::string_view s, std::size_t line) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError("malformed number '" + std::string(s) + "'", line);
  }
  return x;
}

template <typename Int>
Int parse_int(std::string_view s, std::size_t line) {
  Int x{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError("malformed integer '" + std::string(s) + "'", line);
  }
  return x;
}

inline std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace detail

/// Count-based n-gram model. Every document is padded with order-1 BOS
/// tokens and terminated by EOS. Immutable after training.
class NGramLM {
 public:
  using Context = std::vector<TokenId>;
  struct Successors {
    std::map<TokenId, std::uint64_t> counts;
    std::uint64_t total = 0;
  };

  static NGramLM train(const Corpus& corpus, const Vocabulary& vocab, int order,
                       Smoothing smoothing = AddK{}) {
    if (order < 1) throw ParameterError("n-gram order must be >= 1");
    if (corpus.empty()) throw ParameterError("cannot train on an empty corpus");
    NGramLM lm(vocab, order, std::move(smoothing));
    const auto history = static_cast<std::size_t>(order - 1);
    for (const auto& doc : corpus.documents) {
      std::vector<TokenId> padded(history, Vocabulary::kBos);
      for (TokenId t : doc) padded.push_back(lm.clip(t));
      padded.push_back(Vocabulary::kEos);
      for (std::size_t i = history; i < padded.size(); ++i) {
        for (std::size_t j = 0; j <= history; ++j) {
          Context ctx(padded.begin() + static_cast<std::ptrdiff_t>(i - j),
                      padded.begin() + static_cast<std::ptrdiff_t>(i));
          auto& s = lm.counts_[j][ctx];
          ++s.counts[padded[i]];
          ++s.total;
        }
      }
    }
    return lm;
  }

  int order() const noexcept { return order_; }
  const Smoothing& smoothing() const noexcept { return smoothing_; }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  std::size_t vocab_size() const noexcept { return vocab_.size(); }

  // Raw count of `next` after `context` (context length <= order-1).
  std::uint64_t count(const Context& context, TokenId next) const {
    if (context.size() >= counts_.size()) return 0;
    const auto& table = counts_[context.size()];
    auto it = table.find(context);
    if (it == table.end()) return 0;
    auto jt = it->second.counts.find(next);
    return jt == it->second.counts.end() ? 0 : jt->second;
  }

  /// q(. | context). Only the last order-1 tokens of BOS-padded context matter.
  ProbDist next_distribution(std::span<const TokenId> context) const {
    const auto history = static_cast<std::size_t>(order_ - 1);
    Context ctx(history, Vocabulary::kBos);
    const std::size_t take = std::min(history, context.size());
    for (std::size_t i = 0; i < take; ++i) {
      ctx[history - take + i] = clip(context[context.size() - take + i]);
    }
    const std::size_t n = vocab_.size();
    std::vector<double> probs(n, 0.0);
    if (const auto* add_k = std::get_if<AddK>(&smoothing_)) {
      const Successors* s = find(ctx);
      const double total = s ? static_cast<double>(s->total) : 0.0;
      const double denom = total + add_k->k * static_cast<double>(n);
      std::fill(probs.begin(), probs.end(), add_k->k / denom);
      if (s) {
        for (const auto& [id, c] : s->counts) {
          probs[static_cast<std::size_t>(id)] = (static_cast<double>(c) + add_k->k) / denom;
        }
      }
      return ProbDist(std::move(probs));
    }
    const auto& weights = std::get<Interpolated>(smoothing_).weights;
    double active = weights[0];
    std::fill(probs.begin(), probs.end(), weights[0] / static_cast<double>(n));
    for (std::size_t j = 1; j < weights.size(); ++j) {
      Context sub(ctx.end() - static_cast<std::ptrdiff_t>(j - 1), ctx.end());
      const Successors* s = find(sub);
      if (!s || weights[j] == 0.0) continue;
      active += weights[j];
      for (const auto& [id, c] : s->counts) {
        probs[static_cast<std::size_t>(id)] += weights[j] * static_cast<double>(c) / static_cast<double>(s->total);
      }
    }
    for (double& p : probs) p /= active;
    return normalize(probs);
  }

  /// Sum of per-step log probabilities (nats) of `tokens` given BOS context.
  double sequence_logprob(std::span<const TokenId> tokens) const {
    if (tokens.empty()) throw ParameterError("sequence_logprob needs a nonempty sequence");
    double total = 0.0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const ProbDist q = next_distribution(tokens.first(i));
      total += std::log(q[clip(tokens[i])]);
    }
    return total;
  }

  // Line-oriented dump; doubles use shortest round-trip formatting so
  // save(load(save(lm))) is byte-identical to save(lm).
  void save(std::ostream& out) const {
    out << "ifdid-ngram 1\n";
    out << "order " << order_ << '\n';
    if (const auto* add_k = std::get_if<AddK>(&smoothing_)) {
      out << "smoothing add_k " << detail::format_double(add_k->k) << '\n';
    } else {
      out << "smoothing interpolated";
      for (double w : std::get<Interpolated>(smoothing_).weights) out << ' ' << detail::format_double(w);
      out << '\n';
    }
    out << "vocab " << vocab_.size() << '\n';
    for (const auto& t : vocab_.tokens()) out << t << '\n';
    std::size_t contexts = 0;
    for (const auto& table : counts_) contexts += table.size();
    out << "contexts " << contexts << '\n';
    for (std::size_t j = 0; j < counts_.size(); ++j) {
      for (const auto& [ctx, s] : counts_[j]) {
        out << j;
        for (TokenId t : ctx) out << ' ' << t;
        out << ' ' << s.counts.size();
        for (const auto& [id, c] : s.counts) out << ' ' << id << ':' << c;
        out << '\n';
      }
    }
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path);
    save(out);
    if (!out) throw IoError(path, "write failure");
  }

  static NGramLM load(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(std::move(line));
    std::size_t pos = 0;
    auto next_line = [&]() -> const std::string& {
      if (pos >= lines.size()) throw ParseError("unexpected end of n-gram dump", pos + 1);
      return lines[pos++];
    };
    auto expect_fields = [&](std::string_view key, std::size_t min_fields) {
      const std::string& l = next_line();
      auto f = detail::split_spaces(l);
      if (f.size() < min_fields || f[0] != key) {
        throw ParseError("expected '" + std::string(key) + "'", pos);
      }
      return f;
    };
    {
      auto f = expect_fields("ifdid-ngram", 2);
      if (f[1] != "1") throw ParseError("unsupported n-gram dump version", pos);
    }
    const int order = detail::parse_int<int>(expect_fields("order", 2)[1], pos);
    Smoothing smoothing;
    {
      auto f = expect_fields("smoothing", 3);
      if (f[1] == "add_k") {
        smoothing = AddK{detail::parse_double(f[2], pos)};
      } else if (f[1] == "interpolated") {
        Interpolated interp;
        for (std::size_t i = 2; i < f.size(); ++i) interp.weights.push_back(detail::parse_double(f[i], pos));
        smoothing = std::move(interp);
      } else {
        throw ParseError("unknown smoothing '" + std::string(f[1]) + "'", pos);
      }
    }
    const auto vocab_n = detail::parse_int<std::size_t>(expect_fields("vocab", 2)[1], pos);
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < vocab_n; ++i) tokens.push_back(next_line());
    if (tokens.size() < 3 || tokens[0] != Vocabulary::kBosToken || tokens[1] != Vocabulary::kEosToken ||
        tokens[2] != Vocabulary::kUnkToken) {
      throw ParseError("vocabulary section must start with the special tokens", pos);
    }
    Vocabulary vocab(std::vector<std::string>(tokens.begin() + 3, tokens.end()));
    NGramLM lm(vocab, order, std::move(smoothing));
    const auto n_ctx = detail::parse_int<std::size_t>(expect_fields("contexts", 2)[1], pos);
    for (std::size_t c = 0; c < n_ctx; ++c) {
      const std::string& l = next_line();
      auto f = detail::split_spaces(l);
      if (f.empty()) throw ParseError("empty context line", pos);
      const auto j = detail::parse_int<std::size_t>(f[0], pos);
      if (j >= lm.counts_.size() || f.size() < j + 2) throw ParseError("bad context length", pos);
      Context ctx;
      for (std::size_t i = 0; i < j; ++i) ctx.push_back(lm.checked_id(detail::parse_int<TokenId>(f[1 + i], pos), pos));
      const auto n_succ = detail::parse_int<std::size_t>(f[1 + j], pos);
      if (f.size() != j + 2 + n_succ) throw ParseError("successor count mismatch", pos);
      Successors s;
      for (std::size_t i = 0; i < n_succ; ++i) {
        std::string_view item = f[j + 2 + i];
        const auto colon = item.find(':');
        if (colon == std::string_view::npos) throw ParseError("expected id:count", pos);
        const TokenId id = lm.checked_id(detail::parse_int<TokenId>(item.substr(0, colon), pos), pos);
        const auto cnt = detail::parse_int<std::uint64_t>(item.substr(colon + 1), pos);
        s.counts[id] = cnt;
        s.total += cnt;
      }
      lm.counts_[j][std::move(ctx)] = std::move(s);
    }
    return lm;
  }

  static NGramLM load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path);
    return load(in);
  }

 private:
  NGramLM(Vocabulary vocab, int order, Smoothing smoothing)
      : vocab_(std::move(vocab)), order_(order), smoothing_(std::move(smoothing)),
        counts_(static_cast<std::size_t>(order)) {
    if (order_ < 1) throw ParameterError("n-gram order must be >= 1");
    if (const auto* add_k = std::get_if<AddK>(&smoothing_)) {
      if (!(add_k->k > 0.0) || !std::isfinite(add_k->k)) throw ParameterError("add-k smoothing needs k > 0");
    } else {
      const auto& w = std::get<Interpolated>(smoothing_).weights;
      if (w.size() != static_cast<std::size_t>(order_) + 1) {
        throw ParameterError("interpolated smoothing needs order+1 weights");
      }
      for (double x : w) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw ParameterError("interpolation weights must be >= 0");
      }
      if (!(w[0] > 0.0)) throw ParameterError("uniform interpolation weight must be > 0");
    }
  }

  TokenId clip(TokenId t) const noexcept {
    return (t < 0 || static_cast<std::size_t>(t) >= vocab_.size()) ? Vocabulary::kUnk : t;
  }

  TokenId checked_id(TokenId t, std::size_t line) const {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_.size()) throw ParseError("token id out of range", line);
    return t;
  }

  const Successors* find(const Context& ctx) const {
    const auto& table = counts_[ctx.size()];
    auto it = table.find(ctx);
    return it == table.end() ? nullptr : &it->second;
  }

  Vocabulary vocab_;
  int order_;
  Smoothing smoothing_;
  std::vector<std::map<Context, Successors>> counts_;  // indexed by context length
};

static_assert(LanguageModel<const NGramLM>);

/// Replays next-token distributions exported from an external model, one
/// per decoding step. Single consumer.
class ReplayProvider {
 public:
  explicit ReplayProvider(std::vector<ProbDist> steps) : steps_(std::move(steps)) {}

  // One step per line, space-separated probabilities. Rows are renormalized;
  // negative or non-finite entries and inconsistent widths are rejected.
  static ReplayProvider load(std::istream& in) {
    std::vector<ProbDist> steps;
    std::string line;
    std::size_t row = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
      ++row;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (is_blank(line)) continue;
      std::vector<double> probs;
      for (auto field : detail::split_spaces(line)) {
        const double p = detail::parse_double(field, row);
        if (!(p >= 0.0) || !std::isfinite(p)) {
          throw ParseError("row " + std::to_string(row) + " has a negative or non-finite probability", row);
        }
        probs.push_back(p);
      }
      if (width == 0) width = probs.size();
      if (probs.size() != width) throw ParseError("row " + std::to_string(row) + " has the wrong width", row);
      try {
        steps.push_back(normalize(probs));
      } catch (const InvalidWeightsError&) {
        throw ParseError("row " + std::to_string(row) + " has no positive probability", row);
      }
    }
    return ReplayProvider(std::move(steps));
  }

  static ReplayProvider load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path);
    return load(in);
  }

  ProbDist replay_next() {
    if (cursor_ >= steps_.size()) throw EndOfStreamError("replay provider exhausted");
    return steps_[cursor_++];
  }

  std::size_t remaining() const noexcept { return steps_.size() - cursor_; }
  std::size_t width() const noexcept { return steps_.empty() ? 0 : steps_.front().size(); }
  void rewind() noexcept { cursor_ = 0; }

 private:
  std::vector<ProbDist> steps_;
  std::size_t cursor_ = 0;
};

/// LanguageModel adapter over a ReplayProvider; ignores the context.
class ReplayModel {
 public:
  explicit ReplayModel(ReplayProvider& provider) : provider_(&provider) {}
  ProbDist next_distribution(std::span<const TokenId>) { return provider_->replay_next(); }
  std::size_t vocab_size() const noexcept { return provider_->width(); }

 private:
  ReplayProvider* provider_;
};

static_assert(LanguageModel<ReplayModel>);

}  // namespace ifdid
