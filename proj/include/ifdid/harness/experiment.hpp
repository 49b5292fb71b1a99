#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ifdid/decoders.hpp"
#include "ifdid/embeddings.hpp"
#include "ifdid/harness/config.hpp"
#include "ifdid/harness/io.hpp"
#include "ifdid/harness/report.hpp"
#include "ifdid/metrics.hpp"
#include "ifdid/ngram_lm.hpp"
#include "ifdid/vocabulary.hpp"

namespace ifdid::harness {

/// One line of the prompt file: `pieces<TAB>prompt<TAB>reference...`.
/// Pieces are space separated; the prompt column may be empty.
struct PromptItem {
  std::vector<std::vector<std::string>> pieces;
  std::vector<std::string> prompt;
  std::vector<std::vector<std::string>> references;
};

inline std::vector<PromptItem> parse_prompts(const std::vector<std::string>& lines, TokenizerMode mode) {
  std::vector<PromptItem> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (is_blank(line) || line.front() == '#') continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      const auto tab = line.find('\t', start);
      cols.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    PromptItem item;
    try {
      for (const auto& piece : tokenize(cols[0], TokenizerMode::whitespace)) {
        item.pieces.push_back(tokenize(piece, mode));
      }
      if (cols.size() > 1) item.prompt = tokenize(cols[1], mode);
      for (std::size_t c = 2; c < cols.size(); ++c) {
        if (!is_blank(cols[c])) item.references.push_back(tokenize(cols[c], mode));
      }
    } catch (const ParseError& e) {
      throw ParseError(e.what(), i + 1);
    }
    if (item.pieces.empty()) throw ParseError("prompt line has no input pieces", i + 1);
    out.push_back(std::move(item));
  }
  if (out.empty()) throw ParseError("prompt file holds no prompts", 0);
  return out;
}

/// Everything decoding needs, built once per run.
struct Workspace {
  Vocabulary vocab;
  std::optional<NGramLM> lm;
  std::optional<EmbeddingTable> embeddings;
  std::vector<PromptItem> prompts;
  Corpus corpus;

  const NGramLM& model() const { return *lm; }
};

inline bool needs_embeddings(const ExperimentConfig& cfg) {
  for (const auto& s : cfg.strategies) {
    if (s.config.strategy == Strategy::ifdid_simi) return true;
  }
  return false;
}

inline EmbeddingTable make_embeddings(const ExperimentConfig& cfg, const Workspace& ws) {
  if (cfg.embeddings.path) return load_text_vectors(cfg.embeddings.path->string(), ws.vocab);
  return train_cooccurrence(ws.corpus, ws.vocab.size(), cfg.embeddings.window, cfg.embeddings.dim);
}

/// Loads data, trains or loads the model, and checks every strategy against
/// the vocabulary so configuration errors surface before decoding starts.
inline Workspace prepare_workspace(const ExperimentConfig& cfg, bool with_embeddings) {
  Workspace ws;
  const auto lines = read_lines(cfg.corpus.string());
  if (cfg.lm.path) {
    ws.lm = NGramLM::load(cfg.lm.path->string());
    ws.vocab = ws.lm->vocabulary();
    ws.corpus = make_corpus(lines, ws.vocab, cfg.tokenizer, cfg.corpus.string());
  } else {
    ws.vocab = build_vocabulary(lines, cfg.tokenizer, cfg.min_count);
    ws.corpus = make_corpus(lines, ws.vocab, cfg.tokenizer, cfg.corpus.string());
    ws.lm = NGramLM::train(ws.corpus, ws.vocab, cfg.lm.order, cfg.lm.smoothing);
  }
  ws.prompts = parse_prompts(read_lines(cfg.prompts.string()), cfg.tokenizer);
  for (const auto& s : cfg.strategies) {
    try {
      s.config.validate(ws.vocab.size());
    } catch (const std::exception& e) {
      throw ConfigError("strategy '" + s.name + "': " + e.what());
    }
  }
  for (const auto& m : cfg.metrics) {
    const bool needs_refs = m.kind == MetricSpec::Kind::bleu || m.kind == MetricSpec::Kind::rouge_n ||
                            m.kind == MetricSpec::Kind::rouge_l;
    if (!needs_refs) continue;
    for (const auto& p : ws.prompts) {
      if (p.references.empty()) throw ConfigError("metric '" + m.key + "' needs a reference for every prompt");
    }
  }
  if (with_embeddings) ws.embeddings = make_embeddings(cfg, ws);
  return ws;
}

/// One decode, identified by its position in the fixed reduction order.
struct Sample {
  std::size_t prompt_id = 0;
  std::uint64_t seed = 0;
  std::size_t sample = 0;
  DecodeRecord record;
};

namespace detail {

// Pieces made only of in-vocabulary tokens; unknown words cannot be boosted.
inline std::vector<std::vector<TokenId>> known_pieces(const PromptItem& p, const Vocabulary& vocab) {
  std::vector<std::vector<TokenId>> out;
  for (const auto& piece : p.pieces) {
    auto ids = vocab.encode(piece);
    if (std::find(ids.begin(), ids.end(), Vocabulary::kUnk) == ids.end()) out.push_back(std::move(ids));
  }
  return out;
}

}  // namespace detail

/// Decodes prompts x seeds x samples for one strategy. The RNG stream of a
/// decode is prompt_id * samples_per_prompt + sample, independent of the
/// strategy, so strategies sharing a seed see common random numbers.
/// Results are ordered by prompt, then seed, then sample.
inline std::vector<Sample> decode_all(const ExperimentConfig& cfg, const Workspace& ws, const StrategySpec& spec,
                                      std::size_t max_length, std::span<const std::uint64_t> seeds) {
  std::vector<DecodeConfig> templates;
  std::vector<Guidance> guidance;
  templates.reserve(ws.prompts.size());
  guidance.reserve(ws.prompts.size());
  for (const auto& p : ws.prompts) {
    DecodeConfig c = spec.config;
    c.max_length = max_length;
    c.prompt = ws.vocab.encode(p.prompt);
    c.input_pieces = detail::known_pieces(p, ws.vocab);
    const EmbeddingTable* emb = ws.embeddings ? &*ws.embeddings : nullptr;
    guidance.push_back(make_guidance(c, ws.vocab, emb, cfg.extra_terminals));
    templates.push_back(std::move(c));
  }
  const std::size_t per_prompt = seeds.size() * cfg.samples_per_prompt;
  const std::size_t total = ws.prompts.size() * per_prompt;
  return parallel_map<Sample>(total, cfg.threads, [&](std::size_t i) {
    Sample s;
    s.prompt_id = i / per_prompt;
    const std::size_t within = i % per_prompt;
    s.seed = seeds[within / cfg.samples_per_prompt];
    s.sample = within % cfg.samples_per_prompt;
    DecodeConfig c = templates[s.prompt_id];
    c.seed = s.seed;
    c.stream = s.prompt_id * cfg.samples_per_prompt + s.sample;
    s.record = decode(ws.model(), c, guidance[s.prompt_id]);
    return s;
  });
}

// ---------------------------------------------------------------------------
// Records

inline ordered_json record_json(const Sample& s, const std::string& strategy, const Vocabulary& vocab) {
  ordered_json steps = ordered_json::array();
  for (const auto& d : s.record.steps) {
    ordered_json step;
    step["entropy"] = d.entropy;
    // JSON has no infinity; a zero-probability choice is written as null
    step["info"] = std::isfinite(d.information) ? ordered_json(d.information) : ordered_json(nullptr);
    step["survivors"] = d.survivors;
    steps.push_back(std::move(step));
  }
  ordered_json j;
  j["prompt_id"] = s.prompt_id;
  j["seed"] = s.seed;
  j["sample"] = s.sample;
  j["strategy"] = strategy;
  j["tokens"] = vocab.decode(s.record.tokens);
  j["termination"] = std::string(to_string(s.record.termination));
  j["per_step"] = std::move(steps);
  return j;
}

inline std::string records_jsonl(std::span<const Sample> samples, const std::string& strategy, const Vocabulary& vocab) {
  std::string out;
  for (const auto& s : samples) {
    out += record_json(s, strategy, vocab).dump();
    out += '\n';
  }
  return out;
}

/// Reads the fields metrics need back from a records file.
inline std::vector<Sample> read_records(const fs::path& path, const Vocabulary& vocab) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string());
  std::vector<Sample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Sample s;
      s.prompt_id = j.at("prompt_id").get<std::size_t>();
      s.seed = j.at("seed").get<std::uint64_t>();
      s.sample = j.value("sample", std::size_t{0});
      s.record.tokens = vocab.encode(j.at("tokens").get<std::vector<std::string>>());
      s.record.termination = j.at("termination").get<std::string>() == "eos" ? Termination::eos : Termination::max_length;
      out.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), line_no);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

/// Text metrics see the generated tokens without BOS/EOS; perplexity scores
/// the tokens as emitted.
inline std::vector<std::string> visible_text(const DecodeRecord& rec, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (TokenId t : rec.tokens) {
    if (t != Vocabulary::kBos && t != Vocabulary::kEos) out.push_back(vocab.token(t));
  }
  return out;
}

namespace detail {

inline double mean(const std::vector<double>& xs) {
  return xs.empty() ? 0.0 : compensated_sum(xs) / static_cast<double>(xs.size());
}

}  // namespace detail

inline MetricReport compute_metrics(const ExperimentConfig& cfg, const Workspace& ws, const std::string& strategy,
                                    std::span<const Sample> samples) {
  MetricReport report;
  report.strategy = strategy;
  report.samples = samples.size();
  std::vector<std::vector<std::string>> texts;
  texts.reserve(samples.size());
  for (const auto& s : samples) {
    if (s.prompt_id >= ws.prompts.size()) throw ParameterError("record refers to an unknown prompt");
    texts.push_back(visible_text(s.record, ws.vocab));
    report.per_sample.push_back({s.prompt_id, s.seed, s.sample, {}});
  }
  auto per_text = [&](const std::string& key, const std::vector<double>& xs) {
    for (std::size_t i = 0; i < xs.size(); ++i) report.per_sample[i].values.emplace_back(key, xs[i]);
  };
  auto refs_of = [&](std::size_t i) -> const std::vector<std::vector<std::string>>& {
    return ws.prompts[samples[i].prompt_id].references;
  };

  for (const auto& m : cfg.metrics) {
    std::optional<double> value;
    if (!samples.empty()) {
      switch (m.kind) {
        case MetricSpec::Kind::dist:
          value = dist_n(texts, m.order);
          break;
        case MetricSpec::Kind::uniq:
          value = static_cast<double>(uniq_n(texts, m.order));
          break;
        case MetricSpec::Kind::rep: {
          std::vector<double> xs;
          for (const auto& t : texts) xs.push_back(rep_n(t, m.order));
          value = detail::mean(xs);
          per_text(m.key, xs);
          break;
        }
        case MetricSpec::Kind::bleu: {
          std::vector<std::vector<std::vector<std::string>>> refs;
          std::vector<double> xs;
          for (std::size_t i = 0; i < samples.size(); ++i) {
            refs.push_back(refs_of(i));
            xs.push_back(bleu_n(texts[i], refs.back(), m.order));
          }
          value = corpus_bleu<std::string>(texts, refs, m.order);
          per_text(m.key, xs);
          break;
        }
        case MetricSpec::Kind::rouge_n:
        case MetricSpec::Kind::rouge_l: {
          std::vector<double> xs;
          for (std::size_t i = 0; i < samples.size(); ++i) {
            double best = 0.0;
            for (const auto& r : refs_of(i)) {
              const PRF prf = m.kind == MetricSpec::Kind::rouge_n ? rouge_n(texts[i], r, m.order) : rouge_l(texts[i], r);
              best = std::max(best, prf.f1);
            }
            xs.push_back(best);
          }
          value = detail::mean(xs);
          per_text(m.key, xs);
          break;
        }
        case MetricSpec::Kind::ppl: {
          std::vector<std::vector<TokenId>> seqs;
          for (const auto& s : samples) seqs.push_back(s.record.tokens);
          try {
            value = perplexity(ws.model(), std::span<const std::vector<TokenId>>(seqs));
          } catch (const ParameterError&) {
            value.reset();
          }
          break;
        }
        case MetricSpec::Kind::coverage: {
          std::vector<double> xs;
          for (std::size_t i = 0; i < samples.size(); ++i) {
            xs.push_back(coverage(texts[i], ws.prompts[samples[i].prompt_id].pieces));
          }
          value = detail::mean(xs);
          per_text(m.key, xs);
          break;
        }
      }
    }
    if (value && !std::isfinite(*value)) value.reset();
    report.values.emplace_back(m.key, value);
  }
  return report;
}

inline ordered_json metrics_json(const MetricReport& r) {
  ordered_json values = ordered_json::object();
  for (const auto& [k, v] : r.values) values[k] = v ? ordered_json(*v) : ordered_json(nullptr);
  ordered_json j;
  j["strategy"] = r.strategy;
  j["samples"] = r.samples;
  j["metrics"] = std::move(values);
  ordered_json per_sample = ordered_json::array();
  for (const auto& p : r.per_sample) {
    ordered_json row;
    row["prompt_id"] = p.prompt_id;
    row["seed"] = p.seed;
    row["sample"] = p.sample;
    for (const auto& [k, v] : p.values) row[k] = v;
    per_sample.push_back(std::move(row));
  }
  j["per_sample"] = std::move(per_sample);
  return j;
}

// ---------------------------------------------------------------------------
// Runs

struct StrategyRun {
  std::string name;
  std::vector<Sample> samples;
  MetricReport metrics;
};

struct RunResult {
  std::vector<StrategyRun> strategies;
};

/// Decodes every strategy, then writes records, metrics and the report.
/// Nothing is written until all decoding has succeeded.
inline RunResult run_experiment(const ExperimentConfig& cfg, const Workspace& ws, bool write_files = true) {
  RunResult result;
  for (const auto& spec : cfg.strategies) {
    StrategyRun run;
    run.name = spec.name;
    run.samples = decode_all(cfg, ws, spec, cfg.max_length, cfg.seeds);
    run.metrics = compute_metrics(cfg, ws, spec.name, run.samples);
    result.strategies.push_back(std::move(run));
  }
  if (!write_files) return result;
  std::vector<MetricReport> reports;
  for (const auto& run : result.strategies) {
    const auto dir = cfg.experiment_dir() / run.name;
    write_file_atomically(dir / "records.jsonl", records_jsonl(run.samples, run.name, ws.vocab));
    write_file_atomically(dir / "metrics.json", metrics_json(run.metrics).dump(2) + "\n");
    reports.push_back(run.metrics);
  }
  emit_report(cfg, reports);
  return result;
}

inline RunResult run_experiment(const ExperimentConfig& cfg, bool write_files = true) {
  const Workspace ws = prepare_workspace(cfg, needs_embeddings(cfg));
  return run_experiment(cfg, ws, write_files);
}

}  // namespace ifdid::harness
