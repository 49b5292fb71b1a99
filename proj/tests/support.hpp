#pragma once

// Shared helpers for the unit tests: seeded generators for property checks,
// a table-driven language model and scratch directories.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "ifdid/ifdid.hpp"

namespace testing_support {

using ifdid::ProbDist;
using ifdid::TokenId;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  std::size_t range(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
  }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  bool coin(double p = 0.5) { return real(0.0, 1.0) < p; }

  // Random distribution; some draws are spiky, some flat, some hold zeros.
  ProbDist dist(std::size_t n, bool allow_zeros = true) {
    std::vector<double> w(n);
    const double spread = real(0.1, 8.0);
    for (auto& x : w) x = std::exp(real(-spread, spread));
    if (allow_zeros && n > 1) {
      const std::size_t zeros = index(n);
      for (std::size_t i = 0; i < zeros; ++i) w[index(n)] = 0.0;
      if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) w[index(n)] = 1.0;
    }
    return ifdid::normalize(w);
  }

  ifdid::TokenSet subset(std::size_t n, double p = 0.3) {
    ifdid::TokenSet s;
    for (std::size_t i = 0; i < n; ++i) {
      if (coin(p)) s.insert(static_cast<TokenId>(i));
    }
    return s;
  }

  std::vector<TokenId> tokens(std::size_t len, std::size_t vocab) {
    std::vector<TokenId> out(len);
    for (auto& t : out) t = static_cast<TokenId>(index(vocab));
    return out;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Language model whose next distribution depends only on the last token
/// (or the empty context). Unlisted contexts fall back to `fallback`.
class TableLM {
 public:
  TableLM(std::size_t vocab, ProbDist fallback) : vocab_(vocab), fallback_(std::move(fallback)) {}

  void set(TokenId last, ProbDist d) { table_.insert_or_assign(last, std::move(d)); }
  void set_start(ProbDist d) { start_ = std::move(d); }

  ProbDist next_distribution(std::span<const TokenId> context) const {
    if (context.empty()) return start_ ? *start_ : fallback_;
    auto it = table_.find(context.back());
    return it == table_.end() ? fallback_ : it->second;
  }
  std::size_t vocab_size() const { return vocab_; }

 private:
  std::size_t vocab_;
  ProbDist fallback_;
  std::optional<ProbDist> start_;
  std::map<TokenId, ProbDist> table_;
};

static_assert(ifdid::LanguageModel<const TableLM>);

/// A random TableLM over `vocab` tokens, every context listed.
inline TableLM random_lm(Gen& gen, std::size_t vocab) {
  TableLM lm(vocab, gen.dist(vocab, false));
  lm.set_start(gen.dist(vocab, false));
  for (std::size_t t = 0; t < vocab; ++t) lm.set(static_cast<TokenId>(t), gen.dist(vocab, false));
  return lm;
}

inline double sum(const ProbDist& d) { return ifdid::compensated_sum(d.probs()); }

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ifdid_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

  std::filesystem::path write(const std::string& name, const std::string& contents) const {
    const auto p = path_ / name;
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << contents;
    return p;
  }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace testing_support
