#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ifdid/error.hpp"

namespace ifdid {

using TokenId = std::int32_t;

enum class TokenizerMode { whitespace, character };

inline TokenizerMode parse_tokenizer_mode(std::string_view name) {
  if (name == "whitespace") return TokenizerMode::whitespace;
  if (name == "char" || name == "character") return TokenizerMode::character;
  throw ParameterError("unknown tokenizer mode: " + std::string(name));
}

namespace detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Length in bytes of the UTF-8 sequence starting at s[i], 0 if malformed.
inline std::size_t utf8_sequence_length(std::string_view s, std::size_t i) {
  const auto lead = static_cast<unsigned char>(s[i]);
  std::size_t len = 0;
  std::uint32_t cp = 0;
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) {
    len = 2;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4;
    cp = lead & 0x07;
  } else {
    return 0;
  }
  if (i + len > s.size()) return 0;
  for (std::size_t k = 1; k < len; ++k) {
    const auto c = static_cast<unsigned char>(s[i + k]);
    if ((c & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (c & 0x3F);
  }
  // overlong encodings and surrogates
  if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
      cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    return 0;
  }
  return len;
}

}  // namespace detail

inline bool is_valid_utf8(std::string_view text) {
  for (std::size_t i = 0; i < text.size();) {
    const std::size_t len = detail::utf8_sequence_length(text, i);
    if (len == 0) return false;
    i += len;
  }
  return true;
}

// Whitespace mode splits on ASCII whitespace runs; character mode yields one
// token per code point, whitespace included.
inline std::vector<std::string> tokenize(std::string_view text, TokenizerMode mode) {
  if (!is_valid_utf8(text)) throw ParseError("input is not valid UTF-8", 0);
  std::vector<std::string> out;
  if (mode == TokenizerMode::whitespace) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && detail::is_space(text[i])) ++i;
      const std::size_t start = i;
      while (i < text.size() && !detail::is_space(text[i])) ++i;
      if (i > start) out.emplace_back(text.substr(start, i - start));
    }
  } else {
    for (std::size_t i = 0; i < text.size();) {
      const std::size_t len = detail::utf8_sequence_length(text, i);
      out.emplace_back(text.substr(i, len));
      i += len;
    }
  }
  return out;
}

// Inverse of tokenize on its own output, up to whitespace normalization.
inline std::string detokenize(std::span<const std::string> tokens, TokenizerMode mode) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (mode == TokenizerMode::whitespace && i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw IoError(path, "read failure");
  return lines;
}

inline bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), detail::is_space);
}

/// Bijective token <-> id map. The three specials always occupy ids 0..2.
class Vocabulary {
 public:
  static constexpr TokenId kBos = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kUnk = 2;
  static constexpr std::string_view kBosToken = "<s>";
  static constexpr std::string_view kEosToken = "</s>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

  // `regular` must not contain duplicates or special tokens.
  explicit Vocabulary(std::vector<std::string> regular) {
    tokens_.reserve(regular.size() + 3);
    tokens_.emplace_back(kBosToken);
    tokens_.emplace_back(kEosToken);
    tokens_.emplace_back(kUnkToken);
    for (auto& t : regular) tokens_.push_back(std::move(t));
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (tokens_[i].empty()) throw ParameterError("empty token in vocabulary");
      if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
        throw ParameterError("duplicate token in vocabulary: " + tokens_[i]);
      }
    }
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  bool contains(std::string_view token) const { return index_.count(std::string(token)) > 0; }

  TokenId id(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? kUnk : it->second;
  }

  const std::string& token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
      throw ParameterError("token id out of range: " + std::to_string(id));
    }
    return tokens_[static_cast<std::size_t>(id)];
  }

  static bool is_special(TokenId id) noexcept { return id >= kBos && id <= kUnk; }

  std::vector<TokenId> encode(std::span<const std::string> tokens) const {
    std::vector<TokenId> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
  }

  std::vector<std::string> decode(std::span<const TokenId> ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (TokenId i : ids) out.push_back(token(i));
    return out;
  }

  // One token per line in id order; specials on the first three lines.
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path);
    for (const auto& t : tokens_) out << t << '\n';
    if (!out) throw IoError(path, "write failure");
  }

  static Vocabulary load(const std::string& path) {
    auto lines = read_lines(path);
    if (lines.size() < 3 || lines[0] != kBosToken || lines[1] != kEosToken || lines[2] != kUnkToken) {
      throw ParseError("vocabulary file must start with " + std::string(kBosToken) + ", " +
                           std::string(kEosToken) + ", " + std::string(kUnkToken),
                       1);
    }
    return Vocabulary(std::vector<std::string>(lines.begin() + 3, lines.end()));
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Tokens seen at least `min_count` times get ids, ordered by descending
/// frequency with lexicographic tie-break. One document per non-blank line.
inline Vocabulary build_vocabulary(std::span<const std::string> lines, TokenizerMode mode,
                                   std::size_t min_count = 1) {
  if (min_count < 1) throw ParameterError("min_count must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& line : lines) {
    if (is_blank(line)) continue;
    for (auto& t : tokenize(line, mode)) ++counts[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n < min_count) continue;
    if (tok == Vocabulary::kBosToken || tok == Vocabulary::kEosToken || tok == Vocabulary::kUnkToken) {
      continue;
    }
    kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> regular;
  regular.reserve(kept.size());
  for (auto& [tok, n] : kept) regular.push_back(std::move(tok));
  return Vocabulary(std::move(regular));
}

inline Vocabulary build_vocabulary_from_file(const std::string& path, TokenizerMode mode,
                                             std::size_t min_count = 1) {
  const auto lines = read_lines(path);
  return build_vocabulary(lines, mode, min_count);
}

struct Corpus {
  std::vector<std::vector<TokenId>> documents;
  std::string source;
  std::size_t token_count = 0;

  bool empty() const noexcept { return documents.empty(); }
};

inline Corpus make_corpus(std::span<const std::string> lines, const Vocabulary& vocab,
                          TokenizerMode mode, std::string source = {}) {
  Corpus corpus;
  corpus.source = std::move(source);
  for (const auto& line : lines) {
    if (is_blank(line)) continue;
    auto ids = vocab.encode(tokenize(line, mode));
    corpus.token_count += ids.size();
    corpus.documents.push_back(std::move(ids));
  }
  return corpus;
}

inline Corpus load_corpus(const std::string& path, const Vocabulary& vocab, TokenizerMode mode) {
  const auto lines = read_lines(path);
  return make_corpus(lines, vocab, mode, path);
}

}  // namespace ifdid
