#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ifdid/embeddings.hpp"
#include "ifdid/enhance.hpp"
#include "ifdid/error.hpp"
#include "ifdid/info_filter.hpp"
#include "ifdid/prob_dist.hpp"

namespace ifdid {

enum class Strategy { greedy, beam, temperature, top_k, nucleus, gamma, ifdid, ifdid_simi };

inline constexpr std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::greedy: return "greedy";
    case Strategy::beam: return "beam";
    case Strategy::temperature: return "temperature";
    case Strategy::top_k: return "top_k";
    case Strategy::nucleus: return "nucleus";
    case Strategy::gamma: return "gamma";
    case Strategy::ifdid: return "ifdid";
    case Strategy::ifdid_simi: return "ifdid_simi";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::greedy, Strategy::beam, Strategy::temperature, Strategy::top_k, Strategy::nucleus,
                     Strategy::gamma, Strategy::ifdid, Strategy::ifdid_simi}) {
    if (to_string(s) == name) return s;
  }
  throw ParameterError("unknown strategy: " + std::string(name));
}

inline constexpr bool is_gamma_family(Strategy s) {
  return s == Strategy::gamma || s == Strategy::ifdid || s == Strategy::ifdid_simi;
}

enum class SurvivorSampling { proportional, uniform };

struct DecodeConfig {
  Strategy strategy = Strategy::greedy;

  std::size_t beam_size = 5;
  std::size_t no_repeat_ngram_n = 3;  // 0 disables forbidding
  double temperature = 0.5;
  std::size_t top_k = 5;
  double top_p = 0.3;
  GammaParams gamma;
  FilterParams filter;
  SimiParams simi;
  ExtremenessPolicy extremeness;
  std::optional<bool> clamp_extremes;  // unset: on for the gamma family only
  EnhanceOrder enhance_order = kDefaultEnhanceOrder;
  Redistribution redistribution = Redistribution::proportional;
  SurvivorSampling survivor_sampling = SurvivorSampling::proportional;

  std::size_t max_length = 32;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<TokenId> prompt;
  std::vector<std::vector<TokenId>> input_pieces;

  bool clamps() const { return clamp_extremes.value_or(is_gamma_family(strategy)); }

  // Only the parameters the chosen strategy reads are checked.
  void validate(std::size_t vocab_size) const {
    if (max_length < 1) throw ParameterError("max_length must be >= 1");
    if (vocab_size < 2) throw ParameterError("vocabulary must hold at least two tokens");
    switch (strategy) {
      case Strategy::greedy:
        break;
      case Strategy::beam:
        if (beam_size < 1) throw ParameterError("beam_size must be >= 1");
        break;
      case Strategy::temperature:
        if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ParameterError("temperature must be > 0");
        break;
      case Strategy::top_k:
        if (top_k < 1 || top_k > vocab_size) throw ParameterError("top_k must lie in [1, |V|]");
        break;
      case Strategy::nucleus:
        if (!(top_p > 0.0 && top_p <= 1.0)) throw ParameterError("top_p must lie in (0, 1]");
        break;
      case Strategy::ifdid_simi:
        simi.validate();
        [[fallthrough]];
      case Strategy::ifdid:
        filter.validate();
        [[fallthrough]];
      case Strategy::gamma:
        gamma.validate();
        break;
    }
    if (clamps()) extremeness.validate();
  }
};

/// Per-prompt typical-set material, computed once before decoding.
struct Guidance {
  TokenSet theme;
  TokenSet terminal{Vocabulary::kEos};
  std::vector<double> piece_embedding;
  const EmbeddingTable* embeddings = nullptr;
};

enum class Termination { eos, max_length };

inline constexpr std::string_view to_string(Termination t) { return t == Termination::eos ? "eos" : "max_length"; }

struct StepDiagnostics {
  double entropy = 0.0;      // of the model distribution at this step
  double information = 0.0;  // -ln q(chosen) under that distribution
  std::size_t survivors = 0; // support of the distribution the token was drawn from
  friend bool operator==(const StepDiagnostics&, const StepDiagnostics&) = default;
};

struct DecodeRecord {
  std::vector<TokenId> tokens;
  std::vector<StepDiagnostics> steps;
  Termination termination = Termination::max_length;
  friend bool operator==(const DecodeRecord&, const DecodeRecord&) = default;
};

}  // namespace ifdid
