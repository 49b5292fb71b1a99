#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ifdid/decode_config.hpp"
#include "ifdid/error.hpp"
#include "ifdid/ngram_lm.hpp"
#include "ifdid/vocabulary.hpp"

namespace ifdid::harness {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kConfigVersion = 1;

struct LmSettings {
  int order = 3;
  Smoothing smoothing = AddK{};
  std::optional<fs::path> path;  // load a saved model instead of training
};

struct EmbeddingSettings {
  std::size_t window = 2;
  std::size_t dim = 32;
  std::optional<fs::path> path;  // word2vec text file
};

/// A named decode template. Per-prompt fields (seed, stream, prompt, pieces,
/// max_length) are filled in by the runner.
struct StrategySpec {
  std::string name;
  DecodeConfig config;
};

struct SweepConfig {
  std::vector<std::size_t> max_lengths;
  std::vector<std::string> strategies;
  std::vector<std::uint64_t> seeds;
  std::size_t rep_n = 2;
};

/// A selected metric. `order` is meaningful for dist/uniq/rep/bleu/rouge_n.
struct MetricSpec {
  enum class Kind { dist, uniq, rep, bleu, rouge_n, rouge_l, ppl, coverage };
  Kind kind;
  std::size_t order = 0;
  std::string key;

  bool lower_is_better() const { return kind == Kind::rep || kind == Kind::ppl; }
};

inline MetricSpec parse_metric(const std::string& key) {
  auto with_order = [&](std::string_view prefix, MetricSpec::Kind kind) -> std::optional<MetricSpec> {
    if (key.size() <= prefix.size() || key.compare(0, prefix.size(), prefix) != 0) return std::nullopt;
    std::size_t n = 0;
    for (std::size_t i = prefix.size(); i < key.size(); ++i) {
      if (key[i] < '0' || key[i] > '9') return std::nullopt;
      n = n * 10 + static_cast<std::size_t>(key[i] - '0');
      if (n > 16) return std::nullopt;
    }
    if (n == 0) return std::nullopt;
    return MetricSpec{kind, n, key};
  };
  if (key == "rougeL") return {MetricSpec::Kind::rouge_l, 0, key};
  if (key == "ppl") return {MetricSpec::Kind::ppl, 0, key};
  if (key == "coverage") return {MetricSpec::Kind::coverage, 0, key};
  for (auto [prefix, kind] : {std::pair{std::string_view("dist"), MetricSpec::Kind::dist},
                              std::pair{std::string_view("uniq"), MetricSpec::Kind::uniq},
                              std::pair{std::string_view("rep"), MetricSpec::Kind::rep},
                              std::pair{std::string_view("bleu"), MetricSpec::Kind::bleu},
                              std::pair{std::string_view("rouge"), MetricSpec::Kind::rouge_n}}) {
    if (auto m = with_order(prefix, kind)) return *m;
  }
  throw ConfigError("unknown metric '" + key + "'");
}

struct ExperimentConfig {
  std::string name;
  fs::path corpus;
  fs::path prompts;
  TokenizerMode tokenizer = TokenizerMode::whitespace;
  std::size_t min_count = 1;
  LmSettings lm;
  EmbeddingSettings embeddings;
  std::vector<StrategySpec> strategies;
  std::size_t samples_per_prompt = 1;
  std::vector<std::uint64_t> seeds;
  std::size_t max_length = 32;
  std::vector<MetricSpec> metrics;
  std::vector<std::string> extra_terminals;
  fs::path output_dir;
  unsigned threads = 0;  // 0: hardware concurrency
  std::optional<SweepConfig> sweep;

  fs::path experiment_dir() const { return output_dir / name; }

  const StrategySpec& strategy(std::string_view n) const {
    for (const auto& s : strategies) {
      if (s.name == n) return s;
    }
    throw ConfigError("no strategy named '" + std::string(n) + "'");
  }
};

/// Hyperparameter bundles for the three benchmark setups. Each fills the
/// decoding parameters of every strategy; explicit keys still override.
inline void apply_preset(DecodeConfig& cfg, std::string_view preset) {
  if (preset == "commongen") {
    cfg.beam_size = 5;
    cfg.temperature = 0.5;
    cfg.top_k = 5;
    cfg.gamma = {0.4, 0.9, 0.99};
    cfg.simi.top_n = 350;
    cfg.filter.epsilon = 0.1;
    cfg.simi.lambda = 0.0005;
  } else if (preset == "rocstories") {
    cfg.top_k = 5;
    cfg.top_p = 0.3;
    cfg.gamma = {0.4, 0.7, 0.99};
    cfg.simi.top_n = 300;
    cfg.filter.epsilon = 0.2;
    cfg.simi.lambda = 0.0005;
  } else if (preset == "adgen") {
    cfg.beam_size = 5;
    cfg.top_k = 5;
    cfg.top_p = 0.3;
    cfg.gamma = {0.4, 0.5, 0.9};
    cfg.simi.top_n = 300;
    cfg.filter.epsilon = 0.95;
    cfg.simi.lambda = 0.001;
  } else {
    throw ConfigError("unknown preset '" + std::string(preset) + "'");
  }
}

namespace detail {

inline void require_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) throw ConfigError("unknown key '" + key + "' in " + std::string(where));
  }
}

template <typename T>
T get(const json& obj, std::string_view key, std::string_view where) {
  const auto& v = obj.at(std::string(key));
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + std::string(where));
  }
}

template <typename T>
void read_if(const json& obj, std::string_view key, std::string_view where, T& out) {
  if (obj.contains(std::string(key))) out = get<T>(obj, key, where);
}

// Accepts both unsigned and non-negative signed JSON integers; documents
// built in code hold signed ones.
inline bool is_count(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

inline std::size_t get_count(const json& obj, std::string_view key, std::string_view where) {
  const auto& v = obj.at(std::string(key));
  if (!is_count(v)) throw ConfigError("'" + std::string(key) + "' in " + std::string(where) + " must be a non-negative integer");
  return v.get<std::size_t>();
}

inline void read_count_if(const json& obj, std::string_view key, std::string_view where, std::size_t& out) {
  if (obj.contains(std::string(key))) out = get_count(obj, key, where);
}

inline std::vector<std::uint64_t> get_seeds(const json& obj, std::string_view where) {
  const auto& v = obj.at("seeds");
  if (!v.is_array() || v.empty()) throw ConfigError("'seeds' in " + std::string(where) + " must be a nonempty array");
  std::vector<std::uint64_t> seeds;
  for (const auto& s : v) {
    if (!is_count(s)) throw ConfigError("seeds must be non-negative integers");
    seeds.push_back(s.get<std::uint64_t>());
  }
  return seeds;
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

inline void require_file(const fs::path& p, std::string_view what) {
  if (!fs::is_regular_file(p)) throw ConfigError(std::string(what) + " does not exist: " + p.string());
}

inline TypicalKind parse_kind(const std::string& s) {
  if (s == "repeated") return TypicalKind::repeated;
  if (s == "theme") return TypicalKind::theme;
  if (s == "terminal") return TypicalKind::terminal;
  throw ConfigError("unknown typical set '" + s + "'");
}

inline StrategySpec parse_strategy_spec(const json& obj, std::string_view default_preset) {
  require_keys(obj, "strategy",
               {"name", "strategy", "preset", "beam_size", "no_repeat_ngram_n", "temperature", "top_k", "top_p",
                "gamma_topic", "gamma_sentence", "gamma_rep", "epsilon", "lambda", "top_n", "clamp",
                "clamp_threshold", "enhance_order", "redistribution", "survivor_sampling"});
  StrategySpec spec;
  const auto kind = get<std::string>(obj, "strategy", "strategy");
  try {
    spec.config.strategy = parse_strategy(kind);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  spec.name = obj.contains("name") ? get<std::string>(obj, "name", "strategy") : kind;
  const std::string where = "strategy '" + spec.name + "'";
  if (spec.name.empty() || spec.name.find_first_of("/\\") != std::string::npos || spec.name == "." ||
      spec.name == "..") {
    throw ConfigError("strategy name must be a plain directory name");
  }

  std::string preset(default_preset);
  read_if(obj, "preset", where, preset);
  if (!preset.empty()) apply_preset(spec.config, preset);

  auto& c = spec.config;
  read_count_if(obj, "beam_size", where, c.beam_size);
  read_count_if(obj, "no_repeat_ngram_n", where, c.no_repeat_ngram_n);
  read_if(obj, "temperature", where, c.temperature);
  read_count_if(obj, "top_k", where, c.top_k);
  read_if(obj, "top_p", where, c.top_p);
  read_if(obj, "gamma_topic", where, c.gamma.gamma_topic);
  read_if(obj, "gamma_sentence", where, c.gamma.gamma_sentence);
  read_if(obj, "gamma_rep", where, c.gamma.gamma_rep);
  if (obj.contains("epsilon")) {
    const auto& e = obj.at("epsilon");
    if (e.is_string() && e.get<std::string>() == "inf") {
      c.filter.epsilon = std::numeric_limits<double>::infinity();
    } else {
      c.filter.epsilon = get<double>(obj, "epsilon", where);
    }
  }
  read_if(obj, "lambda", where, c.simi.lambda);
  read_count_if(obj, "top_n", where, c.simi.top_n);
  if (obj.contains("clamp")) c.clamp_extremes = get<bool>(obj, "clamp", where);
  read_if(obj, "clamp_threshold", where, c.extremeness.threshold);
  if (obj.contains("enhance_order")) {
    const auto names = get<std::vector<std::string>>(obj, "enhance_order", where);
    if (names.size() != 3) throw ConfigError("enhance_order must list three typical sets in " + where);
    std::set<TypicalKind> seen;
    for (std::size_t i = 0; i < 3; ++i) {
      c.enhance_order[i] = parse_kind(names[i]);
      seen.insert(c.enhance_order[i]);
    }
    if (seen.size() != 3) throw ConfigError("enhance_order repeats a typical set in " + where);
  }
  if (obj.contains("redistribution")) {
    const auto r = get<std::string>(obj, "redistribution", where);
    if (r == "proportional") {
      c.redistribution = Redistribution::proportional;
    } else if (r == "literal_additive") {
      c.redistribution = Redistribution::literal_additive;
    } else {
      throw ConfigError("unknown redistribution '" + r + "' in " + where);
    }
  }
  if (obj.contains("survivor_sampling")) {
    const auto s = get<std::string>(obj, "survivor_sampling", where);
    if (s == "proportional") {
      c.survivor_sampling = SurvivorSampling::proportional;
    } else if (s == "uniform") {
      c.survivor_sampling = SurvivorSampling::uniform;
    } else {
      throw ConfigError("unknown survivor_sampling '" + s + "' in " + where);
    }
  }
  // vocabulary-dependent checks (top_k <= |V|) happen once the vocabulary exists
  try {
    c.validate(std::numeric_limits<std::size_t>::max());
  } catch (const std::exception& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return spec;
}

}  // namespace detail

/// Parses and validates a config document. Relative paths resolve against
/// `base_dir`. Every error is a ConfigError raised before any compute.
inline ExperimentConfig parse_config(const json& doc, const fs::path& base_dir) {
  using namespace detail;
  require_keys(doc, "config",
               {"version", "name", "corpus", "prompts", "tokenizer", "min_count", "lm", "embeddings", "preset",
                "strategies", "samples_per_prompt", "seeds", "max_length", "metrics", "terminal_tokens",
                "output_dir", "threads", "sweep"});
  if (!doc.contains("version")) throw ConfigError("config needs a 'version' field");
  if (get<int>(doc, "version", "config") != kConfigVersion) {
    throw ConfigError("unsupported config version (expected " + std::to_string(kConfigVersion) + ")");
  }
  for (const char* key : {"name", "corpus", "prompts", "strategies", "seeds", "metrics"}) {
    if (!doc.contains(key)) throw ConfigError(std::string("config needs '") + key + "'");
  }

  ExperimentConfig cfg;
  cfg.name = get<std::string>(doc, "name", "config");
  if (cfg.name.empty() || cfg.name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("experiment name must be a plain directory name");
  }
  cfg.corpus = resolve(base_dir, get<std::string>(doc, "corpus", "config"));
  cfg.prompts = resolve(base_dir, get<std::string>(doc, "prompts", "config"));
  require_file(cfg.corpus, "corpus");
  require_file(cfg.prompts, "prompt file");
  if (doc.contains("tokenizer")) {
    try {
      cfg.tokenizer = parse_tokenizer_mode(get<std::string>(doc, "tokenizer", "config"));
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
  }
  read_count_if(doc, "min_count", "config", cfg.min_count);
  if (cfg.min_count < 1) throw ConfigError("min_count must be >= 1");

  if (doc.contains("lm")) {
    const auto& lm = doc.at("lm");
    require_keys(lm, "lm", {"order", "smoothing", "k", "weights", "path"});
    read_if(lm, "order", "lm", cfg.lm.order);
    if (cfg.lm.order < 1) throw ConfigError("lm order must be >= 1");
    const std::string smoothing = lm.contains("smoothing") ? get<std::string>(lm, "smoothing", "lm") : "add_k";
    if (smoothing == "add_k") {
      AddK a;
      read_if(lm, "k", "lm", a.k);
      if (!(a.k > 0.0)) throw ConfigError("lm k must be > 0");
      if (lm.contains("weights")) throw ConfigError("'weights' needs interpolated smoothing");
      cfg.lm.smoothing = a;
    } else if (smoothing == "interpolated") {
      if (!lm.contains("weights")) throw ConfigError("interpolated smoothing needs 'weights'");
      if (lm.contains("k")) throw ConfigError("'k' needs add_k smoothing");
      Interpolated w{get<std::vector<double>>(lm, "weights", "lm")};
      if (w.weights.size() != static_cast<std::size_t>(cfg.lm.order) + 1) {
        throw ConfigError("interpolation needs order+1 weights");
      }
      cfg.lm.smoothing = w;
    } else {
      throw ConfigError("unknown smoothing '" + smoothing + "'");
    }
    if (lm.contains("path")) {
      cfg.lm.path = resolve(base_dir, get<std::string>(lm, "path", "lm"));
      require_file(*cfg.lm.path, "lm file");
    }
  }

  if (doc.contains("embeddings")) {
    const auto& e = doc.at("embeddings");
    require_keys(e, "embeddings", {"window", "dim", "path"});
    read_count_if(e, "window", "embeddings", cfg.embeddings.window);
    read_count_if(e, "dim", "embeddings", cfg.embeddings.dim);
    if (cfg.embeddings.window < 1 || cfg.embeddings.dim < 1) throw ConfigError("embedding window and dim must be >= 1");
    if (e.contains("path")) {
      cfg.embeddings.path = resolve(base_dir, get<std::string>(e, "path", "embeddings"));
      require_file(*cfg.embeddings.path, "embedding file");
    }
  }

  std::string preset;
  read_if(doc, "preset", "config", preset);
  const auto& strategies = doc.at("strategies");
  if (!strategies.is_array() || strategies.empty()) throw ConfigError("'strategies' must be a nonempty array");
  std::set<std::string> names;
  for (const auto& s : strategies) {
    auto spec = parse_strategy_spec(s, preset);
    if (!names.insert(spec.name).second) throw ConfigError("duplicate strategy name '" + spec.name + "'");
    cfg.strategies.push_back(std::move(spec));
  }

  read_count_if(doc, "samples_per_prompt", "config", cfg.samples_per_prompt);
  if (cfg.samples_per_prompt < 1) throw ConfigError("samples_per_prompt must be >= 1");
  cfg.seeds = get_seeds(doc, "config");
  read_count_if(doc, "max_length", "config", cfg.max_length);
  if (cfg.max_length < 1) throw ConfigError("max_length must be >= 1");

  const auto& metrics = doc.at("metrics");
  if (!metrics.is_array() || metrics.empty()) throw ConfigError("'metrics' must be a nonempty array");
  std::set<std::string> metric_keys;
  for (const auto& m : metrics) {
    if (!m.is_string()) throw ConfigError("metric names must be strings");
    auto spec = parse_metric(m.get<std::string>());
    if (!metric_keys.insert(spec.key).second) throw ConfigError("duplicate metric '" + spec.key + "'");
    cfg.metrics.push_back(std::move(spec));
  }

  read_if(doc, "terminal_tokens", "config", cfg.extra_terminals);
  cfg.output_dir = resolve(base_dir, doc.contains("output_dir") ? get<std::string>(doc, "output_dir", "config") : "out");
  if (doc.contains("threads")) {
    cfg.threads = static_cast<unsigned>(get_count(doc, "threads", "config"));
  }

  if (doc.contains("sweep")) {
    const auto& s = doc.at("sweep");
    require_keys(s, "sweep", {"max_lengths", "strategies", "seeds", "rep_n"});
    SweepConfig sweep;
    if (!s.contains("max_lengths")) throw ConfigError("sweep needs 'max_lengths'");
    for (const auto& v : s.at("max_lengths")) {
      if (!is_count(v) || v.get<std::size_t>() == 0) throw ConfigError("sweep max_lengths must be positive integers");
      const auto len = v.get<std::size_t>();
      if (!sweep.max_lengths.empty() && len <= sweep.max_lengths.back()) {
        throw ConfigError("sweep max_lengths must be strictly increasing");
      }
      sweep.max_lengths.push_back(len);
    }
    if (sweep.max_lengths.empty()) throw ConfigError("sweep max_lengths must not be empty");
    if (s.contains("strategies")) {
      sweep.strategies = get<std::vector<std::string>>(s, "strategies", "sweep");
      for (const auto& n : sweep.strategies) {
        if (!names.count(n)) throw ConfigError("sweep references unknown strategy '" + n + "'");
      }
    } else {
      for (const auto& spec : cfg.strategies) sweep.strategies.push_back(spec.name);
    }
    if (sweep.strategies.empty()) throw ConfigError("sweep strategies must not be empty");
    sweep.seeds = s.contains("seeds") ? get_seeds(s, "sweep") : cfg.seeds;
    read_count_if(s, "rep_n", "sweep", sweep.rep_n);
    if (sweep.rep_n < 1) throw ConfigError("sweep rep_n must be >= 1");
    cfg.sweep = std::move(sweep);
  }
  return cfg;
}

inline ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

/// Command-line overrides applied after parsing.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
  std::optional<std::size_t> max_length;
};

inline void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
  if (o.seed) {
    cfg.seeds = {*o.seed};
    if (cfg.sweep) cfg.sweep->seeds = {*o.seed};
  }
  if (o.strategy) {
    StrategySpec keep = cfg.strategy(*o.strategy);
    cfg.strategies = {keep};
    if (cfg.sweep) cfg.sweep->strategies = {keep.name};
  }
  if (o.max_length) {
    if (*o.max_length < 1) throw ConfigError("max_length must be >= 1");
    cfg.max_length = *o.max_length;
  }
}

}  // namespace ifdid::harness
