#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ifdid/harness/config.hpp"
#include "ifdid/harness/io.hpp"

namespace ifdid::harness {

using ordered_json = nlohmann::ordered_json;

/// Metric values for one strategy; nullopt where a value is undefined.
struct MetricReport {
  std::string strategy;
  std::size_t samples = 0;
  std::vector<std::pair<std::string, std::optional<double>>> values;

  // Per-text values of the metrics defined on single texts (rep, sentence
  // bleu, rouge, coverage), in reduction order.
  struct PerSample {
    std::size_t prompt_id = 0;
    std::uint64_t seed = 0;
    std::size_t sample = 0;
    std::vector<std::pair<std::string, double>> values;
  };
  std::vector<PerSample> per_sample;

  std::optional<double> get(std::string_view key) const {
    for (const auto& [k, v] : values) {
      if (k == key) return v;
    }
    return std::nullopt;
  }
};

/// best[row][col] is true when the row holds the best value of that metric.
/// Exact ties are all flagged; undefined values never are.
inline std::vector<std::vector<bool>> best_flags(std::span<const MetricSpec> metrics,
                                                 std::span<const MetricReport> reports) {
  std::vector<std::vector<bool>> flags(reports.size(), std::vector<bool>(metrics.size(), false));
  for (std::size_t c = 0; c < metrics.size(); ++c) {
    std::optional<double> best;
    for (const auto& r : reports) {
      const auto v = r.get(metrics[c].key);
      if (!v) continue;
      if (!best || (metrics[c].lower_is_better() ? *v < *best : *v > *best)) best = v;
    }
    if (!best) continue;
    for (std::size_t row = 0; row < reports.size(); ++row) {
      const auto v = reports[row].get(metrics[c].key);
      flags[row][c] = v && *v == *best;
    }
  }
  return flags;
}

inline std::string render_report_text(const ExperimentConfig& cfg, std::span<const MetricReport> reports) {
  const auto flags = best_flags(cfg.metrics, reports);
  std::size_t name_width = 8;
  for (const auto& r : reports) name_width = std::max(name_width, r.strategy.size());
  std::string out = "experiment: " + cfg.name + "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(name_width), "strategy");
  out += buf;
  for (const auto& m : cfg.metrics) {
    std::snprintf(buf, sizeof buf, "  %12s", m.key.c_str());
    out += buf;
  }
  out += '\n';
  for (std::size_t row = 0; row < reports.size(); ++row) {
    std::snprintf(buf, sizeof buf, "%-*s", static_cast<int>(name_width), reports[row].strategy.c_str());
    out += buf;
    for (std::size_t c = 0; c < cfg.metrics.size(); ++c) {
      const auto v = reports[row].get(cfg.metrics[c].key);
      std::string cell = v ? (std::snprintf(buf, sizeof buf, "%.4f", *v), std::string(buf)) : std::string("n/a");
      if (flags[row][c]) cell += '*';
      std::snprintf(buf, sizeof buf, "  %12s", cell.c_str());
      out += buf;
    }
    out += '\n';
  }
  out += "* best value per column (lower is better for ppl and rep)\n";
  return out;
}

inline ordered_json render_report_json(const ExperimentConfig& cfg, std::span<const MetricReport> reports) {
  const auto flags = best_flags(cfg.metrics, reports);
  ordered_json metrics = ordered_json::array();
  for (const auto& m : cfg.metrics) metrics.push_back(m.key);
  ordered_json rows = ordered_json::array();
  for (std::size_t row = 0; row < reports.size(); ++row) {
    ordered_json values = ordered_json::object();
    ordered_json best = ordered_json::array();
    for (std::size_t c = 0; c < cfg.metrics.size(); ++c) {
      const auto v = reports[row].get(cfg.metrics[c].key);
      values[cfg.metrics[c].key] = v ? ordered_json(*v) : ordered_json(nullptr);
      if (flags[row][c]) best.push_back(cfg.metrics[c].key);
    }
    ordered_json r;
    r["strategy"] = reports[row].strategy;
    r["samples"] = reports[row].samples;
    r["values"] = std::move(values);
    r["best"] = std::move(best);
    rows.push_back(std::move(r));
  }
  ordered_json j;
  j["experiment"] = cfg.name;
  j["metrics"] = std::move(metrics);
  j["rows"] = std::move(rows);
  return j;
}

/// Writes report.txt and report.json into the experiment directory.
inline void emit_report(const ExperimentConfig& cfg, std::span<const MetricReport> reports) {
  write_file_atomically(cfg.experiment_dir() / "report.txt", render_report_text(cfg, reports));
  write_file_atomically(cfg.experiment_dir() / "report.json", render_report_json(cfg, reports).dump(2) + "\n");
}

}  // namespace ifdid::harness
