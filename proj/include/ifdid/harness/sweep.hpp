#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ifdid/harness/experiment.hpp"

namespace ifdid::harness {

struct SweepCell {
  std::string strategy;
  std::size_t max_length = 0;
  double mean = 0.0;
  double stddev = 0.0;                 // sample standard deviation
  std::optional<double> gradient;      // slope from the previous cell of the same strategy
  std::vector<double> values;          // per-output rep_n in reduction order
};

/// Cuts a record to its first `max_length` tokens. Stepwise decoders never
/// read max_length before stopping, so this equals decoding with that limit.
inline DecodeRecord truncate_record(const DecodeRecord& rec, std::size_t max_length) {
  if (rec.tokens.size() <= max_length) return rec;
  DecodeRecord out;
  out.tokens.assign(rec.tokens.begin(), rec.tokens.begin() + static_cast<std::ptrdiff_t>(max_length));
  out.steps.assign(rec.steps.begin(), rec.steps.begin() + static_cast<std::ptrdiff_t>(max_length));
  out.termination = Termination::max_length;
  return out;
}

inline std::pair<double, double> mean_and_stddev(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  const double m = compensated_sum(xs) / static_cast<double>(xs.size());
  if (xs.size() < 2) return {m, 0.0};
  std::vector<double> sq;
  sq.reserve(xs.size());
  for (double x : xs) sq.push_back((x - m) * (x - m));
  return {m, std::sqrt(compensated_sum(sq) / static_cast<double>(xs.size() - 1))};
}

/// Rep-n against max_length for each sweep strategy. Every cell holds
/// prompts x seeds x samples outputs; any failed decode aborts the sweep.
inline std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const Workspace& ws) {
  if (!cfg.sweep) throw ConfigError("config has no 'sweep' section");
  const SweepConfig& sweep = *cfg.sweep;
  std::vector<SweepCell> cells;
  for (const auto& name : sweep.strategies) {
    const StrategySpec& spec = cfg.strategy(name);
    const bool stepwise = spec.config.strategy != Strategy::beam;
    std::vector<Sample> longest;
    if (stepwise) longest = decode_all(cfg, ws, spec, sweep.max_lengths.back(), sweep.seeds);
    std::optional<std::pair<std::size_t, double>> previous;
    for (std::size_t len : sweep.max_lengths) {
      const auto samples = stepwise ? longest : decode_all(cfg, ws, spec, len, sweep.seeds);
      SweepCell cell;
      cell.strategy = name;
      cell.max_length = len;
      for (const auto& s : samples) {
        const auto rec = truncate_record(s.record, len);
        cell.values.push_back(rep_n(visible_text(rec, ws.vocab), sweep.rep_n));
      }
      std::tie(cell.mean, cell.stddev) = mean_and_stddev(cell.values);
      if (previous) {
        cell.gradient = (cell.mean - previous->second) / static_cast<double>(len - previous->first);
      }
      previous = {len, cell.mean};
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

inline std::string sweep_csv(const std::vector<SweepCell>& cells, std::size_t rep_n) {
  const std::string r = "rep" + std::to_string(rep_n);
  std::string out = "strategy,max_length,mean_" + r + ",std_" + r + ",gradient\n";
  for (const auto& c : cells) {
    out += c.strategy + "," + std::to_string(c.max_length) + "," + ifdid::detail::format_double(c.mean) + "," +
           ifdid::detail::format_double(c.stddev) + ",";
    if (c.gradient) out += ifdid::detail::format_double(*c.gradient);
    out += '\n';
  }
  return out;
}

inline std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, bool write_files = true) {
  if (!cfg.sweep) throw ConfigError("config has no 'sweep' section");
  const Workspace ws = prepare_workspace(cfg, needs_embeddings(cfg));
  auto cells = run_sweep(cfg, ws);
  if (write_files) write_file_atomically(cfg.experiment_dir() / "sweep.csv", sweep_csv(cells, cfg.sweep->rep_n));
  return cells;
}

}  // namespace ifdid::harness
