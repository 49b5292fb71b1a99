#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ifdid/error.hpp"
#include "ifdid/ngram_lm.hpp"
#include "ifdid/vocabulary.hpp"

namespace ifdid {

/// Dense row-major table of word vectors, one row per token id.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t rows, std::size_t dim) : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {
    if (dim == 0) throw ParameterError("embedding dimension must be >= 1");
  }

  std::size_t size() const noexcept { return rows_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> vector(TokenId id) const {
    check(id);
    return {data_.data() + static_cast<std::size_t>(id) * dim_, dim_};
  }
  std::span<double> mutable_vector(TokenId id) {
    check(id);
    return {data_.data() + static_cast<std::size_t>(id) * dim_, dim_};
  }

  // Ids whose vector is all zero: tokens with no co-occurrence evidence, or
  // words absent from a loaded file.
  const std::vector<TokenId>& degenerate() const noexcept { return degenerate_; }
  // Vocabulary words missing from a loaded file (specials excluded).
  const std::vector<std::string>& missing() const noexcept { return missing_; }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.rows_ == b.rows_ && a.dim_ == b.dim_ && a.data_ == b.data_;
  }

 private:
  friend EmbeddingTable train_cooccurrence(const Corpus&, std::size_t, std::size_t, std::size_t);
  friend EmbeddingTable load_text_vectors(std::istream&, const Vocabulary&);

  void check(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= rows_) {
      throw ParameterError("embedding lookup out of range: " + std::to_string(id));
    }
  }

  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::vector<TokenId> degenerate_;
  std::vector<std::string> missing_;
};

/// PPMI-weighted symmetric window co-occurrence, reduced to `dim` columns by
/// the top eigenpairs of the PPMI matrix (rows scaled by sqrt(eigenvalue)).
/// Each basis vector's largest-magnitude component is made positive.
inline EmbeddingTable train_cooccurrence(const Corpus& corpus, std::size_t vocab_size, std::size_t window,
                                         std::size_t dim) {
  if (window < 1) throw ParameterError("co-occurrence window must be >= 1");
  if (dim < 1) throw ParameterError("embedding dimension must be >= 1");
  if (dim > vocab_size) throw ParameterError("embedding dimension exceeds vocabulary size");
  if (corpus.empty()) throw ParameterError("cannot train embeddings on an empty corpus");

  const auto n = static_cast<Eigen::Index>(vocab_size);
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
  for (const auto& doc : corpus.documents) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      const std::size_t hi = std::min(doc.size(), i + window + 1);
      for (std::size_t j = i + 1; j < hi; ++j) {
        const TokenId a = doc[i];
        const TokenId b = doc[j];
        if (a < 0 || b < 0 || a >= n || b >= n) continue;
        counts(a, b) += 1.0;
        counts(b, a) += 1.0;
      }
    }
  }
  const Eigen::VectorXd row_sums = counts.rowwise().sum();
  const double total = row_sums.sum();
  Eigen::MatrixXd ppmi = Eigen::MatrixXd::Zero(n, n);
  if (total > 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double c = counts(i, j);
        if (c <= 0.0) continue;
        const double pmi = std::log(c * total / (row_sums(i) * row_sums(j)));
        if (pmi > 0.0) ppmi(i, j) = pmi;
      }
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(ppmi);
  if (solver.info() != Eigen::Success) throw ParameterError("eigendecomposition failed");
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();

  EmbeddingTable table(vocab_size, dim);
  for (std::size_t k = 0; k < dim; ++k) {
    const Eigen::Index col = n - 1 - static_cast<Eigen::Index>(k);
    Eigen::VectorXd basis = vectors.col(col);
    Eigen::Index argmax = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      if (std::abs(basis(i)) > std::abs(basis(argmax))) argmax = i;
    }
    if (basis(argmax) < 0.0) basis = -basis;
    const double scale = std::sqrt(std::max(values(col), 0.0));
    for (Eigen::Index i = 0; i < n; ++i) {
      table.data_[static_cast<std::size_t>(i) * dim + k] = basis(i) * scale;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (ppmi.row(i).isZero(0.0)) {
      std::fill_n(table.data_.begin() + i * static_cast<std::ptrdiff_t>(dim), dim, 0.0);
      table.degenerate_.push_back(static_cast<TokenId>(i));
    }
  }
  return table;
}

/// word2vec text format: "count dim" header, then "word v1 ... vdim".
inline EmbeddingTable load_text_vectors(std::istream& in, const Vocabulary& vocab) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("missing header", line_no);
  auto header = detail::split_spaces(line);
  if (header.size() != 2) throw ParseError("header must be 'count dim'", line_no);
  detail::parse_int<std::size_t>(header[0], line_no);
  const auto dim = detail::parse_int<std::size_t>(header[1], line_no);
  if (dim == 0) throw ParseError("dimension must be >= 1", line_no);

  EmbeddingTable table(vocab.size(), dim);
  std::vector<bool> seen(vocab.size(), false);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) continue;
    auto fields = detail::split_spaces(line);
    if (fields.size() != dim + 1) {
      throw ParseError("row '" + std::string(fields.empty() ? "" : fields[0]) + "' has " +
                           std::to_string(fields.empty() ? 0 : fields.size() - 1) + " values, header says " +
                           std::to_string(dim),
                       line_no);
    }
    std::vector<double> values(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      values[k] = detail::parse_double(fields[k + 1], line_no);
      if (!std::isfinite(values[k])) throw ParseError("non-finite value", line_no);
    }
    if (!vocab.contains(fields[0])) continue;
    const TokenId id = vocab.id(fields[0]);
    std::copy(values.begin(), values.end(), table.mutable_vector(id).begin());
    seen[static_cast<std::size_t>(id)] = true;
  }
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (seen[i]) continue;
    table.degenerate_.push_back(static_cast<TokenId>(i));
    if (!Vocabulary::is_special(static_cast<TokenId>(i))) table.missing_.push_back(vocab.tokens()[i]);
  }
  return table;
}

inline EmbeddingTable load_text_vectors(const std::string& path, const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw IoError(path);
  return load_text_vectors(in, vocab);
}

// Tokens containing whitespace cannot be represented in the format and are skipped.
inline void save_text_vectors(std::ostream& out, const EmbeddingTable& table, const Vocabulary& vocab) {
  if (table.size() != vocab.size()) throw ParameterError("embedding table and vocabulary differ in size");
  std::vector<TokenId> rows;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const auto& t = vocab.tokens()[i];
    if (std::none_of(t.begin(), t.end(), detail::is_space)) rows.push_back(static_cast<TokenId>(i));
  }
  out << rows.size() << ' ' << table.dim() << '\n';
  for (TokenId id : rows) {
    out << vocab.token(id);
    for (double x : table.vector(id)) out << ' ' << detail::format_double(x);
    out << '\n';
  }
}

inline void save_text_vectors(const std::string& path, const EmbeddingTable& table, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path);
  save_text_vectors(out, table, vocab);
  if (!out) throw IoError(path, "write failure");
}

/// Cosine similarity; 0 when either vector is all zero.
inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ParameterError("cosine of vectors with different dimensions");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

/// Equal-weight mean of the member vectors.
inline std::vector<double> average_embedding(std::span<const TokenId> tokens, const EmbeddingTable& table) {
  if (tokens.empty()) throw ParameterError("average_embedding needs at least one token");
  std::vector<double> mean(table.dim(), 0.0);
  for (TokenId t : tokens) {
    auto v = table.vector(t);
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += v[k];
  }
  for (double& x : mean) x /= static_cast<double>(tokens.size());
  return mean;
}

struct Neighbor {
  TokenId id;
  double similarity;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Top `top_n` tokens by cosine to `query`, ties broken by ascending id.
inline std::vector<Neighbor> nearest(const EmbeddingTable& table, std::span<const double> query, std::size_t top_n,
                                     const std::set<TokenId>& exclude = {}) {
  if (top_n < 1) throw ParameterError("top_n must be >= 1");
  std::vector<Neighbor> all;
  all.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto id = static_cast<TokenId>(i);
    if (exclude.count(id)) continue;
    all.push_back({id, cosine(query, table.vector(id))});
  }
  auto by_rank = [](const Neighbor& a, const Neighbor& b) {
    return a.similarity != b.similarity ? a.similarity > b.similarity : a.id < b.id;
  };
  const std::size_t keep = std::min(top_n, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), by_rank);
  all.resize(keep);
  return all;
}

}  // namespace ifdid
