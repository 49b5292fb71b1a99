// Command-line front end for the decoding harness.
//
//   ifdid run --config configs/commongen_desk.json
//   ifdid sweep --config configs/stories_sweep.json --seed 7
//   ifdid decode --config configs/commongen_desk.json --strategy ifdid --pieces "dog frisbee catch"

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ifdid/harness/config.hpp"
#include "ifdid/harness/experiment.hpp"
#include "ifdid/harness/sweep.hpp"

namespace {

using namespace ifdid;
using namespace ifdid::harness;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> strategy;
  std::optional<std::size_t> max_length;

  ExperimentConfig load() const {
    auto cfg = load_config(config);
    apply_overrides(cfg, {seed, strategy, max_length});
    return cfg;
  }
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "use this single seed");
  cmd->add_option("--strategy", args.strategy, "restrict to one named strategy");
  cmd->add_option("--max-length", args.max_length, "override max_length");
}

int train_lm(const CommonArgs& args, const std::string& output) {
  const auto cfg = args.load();
  const auto ws = prepare_workspace(cfg, false);
  const fs::path path = output.empty() ? cfg.experiment_dir() / "lm.txt" : fs::path(output);
  std::ostringstream out;
  ws.model().save(out);
  write_file_atomically(path, out.str());
  std::cout << "vocabulary " << ws.vocab.size() << ", order " << ws.model().order() << " -> " << path.string() << "\n";
  return 0;
}

int train_emb(const CommonArgs& args, const std::string& output) {
  const auto cfg = args.load();
  auto ws = prepare_workspace(cfg, false);
  const auto table = make_embeddings(cfg, ws);
  const fs::path path = output.empty() ? cfg.experiment_dir() / "embeddings.txt" : fs::path(output);
  std::ostringstream out;
  save_text_vectors(out, table, ws.vocab);
  write_file_atomically(path, out.str());
  std::cout << table.size() << " vectors of dim " << table.dim() << " (" << table.degenerate().size()
            << " without evidence) -> " << path.string() << "\n";
  return 0;
}

int decode_one(const CommonArgs& args, const std::string& pieces, const std::string& prompt, bool text) {
  auto cfg = args.load();
  if (!args.strategy && cfg.strategies.size() > 1) {
    throw ConfigError("decode needs --strategy when the config lists several strategies");
  }
  const StrategySpec& spec = cfg.strategies.front();
  auto ws = prepare_workspace(cfg, spec.config.strategy == Strategy::ifdid_simi);
  ws.prompts = parse_prompts({pieces + "\t" + prompt}, cfg.tokenizer);
  cfg.threads = 1;
  const std::vector<std::uint64_t> seed{cfg.seeds.front()};
  cfg.samples_per_prompt = 1;
  const auto samples = decode_all(cfg, ws, spec, cfg.max_length, seed);
  const auto& s = samples.front();
  if (text) {
    std::cout << detokenize(visible_text(s.record, ws.vocab), cfg.tokenizer) << "\n";
  } else {
    std::cout << record_json(s, spec.name, ws.vocab).dump() << "\n";
  }
  return 0;
}

int metrics(const CommonArgs& args) {
  const auto cfg = args.load();
  const auto ws = prepare_workspace(cfg, false);
  std::vector<MetricReport> reports;
  for (const auto& spec : cfg.strategies) {
    const auto dir = cfg.experiment_dir() / spec.name;
    const auto samples = read_records(dir / "records.jsonl", ws.vocab);
    reports.push_back(compute_metrics(cfg, ws, spec.name, samples));
  }
  for (const auto& r : reports) {
    write_file_atomically(cfg.experiment_dir() / r.strategy / "metrics.json", metrics_json(r).dump(2) + "\n");
  }
  emit_report(cfg, reports);
  std::cout << render_report_text(cfg, reports);
  return 0;
}

int run(const CommonArgs& args) {
  const auto cfg = args.load();
  const auto result = run_experiment(cfg);
  std::vector<MetricReport> reports;
  for (const auto& s : result.strategies) reports.push_back(s.metrics);
  std::cout << render_report_text(cfg, reports);
  return 0;
}

int sweep(const CommonArgs& args) {
  const auto cfg = args.load();
  const auto cells = run_sweep(cfg);
  std::cout << sweep_csv(cells, cfg.sweep->rep_n);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Enhance-then-filter decoding experiments on n-gram language models"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string output;
  std::string pieces;
  std::string prompt;
  bool text = false;

  auto* train_lm_cmd = app.add_subcommand("train-lm", "train the n-gram model and save it");
  add_common(train_lm_cmd, args);
  train_lm_cmd->add_option("--output", output, "model file (default out/<experiment>/lm.txt)");

  auto* train_emb_cmd = app.add_subcommand("train-emb", "train or load embeddings and save them as text vectors");
  add_common(train_emb_cmd, args);
  train_emb_cmd->add_option("--output", output, "vector file (default out/<experiment>/embeddings.txt)");

  auto* decode_cmd = app.add_subcommand("decode", "decode one input and print its record");
  add_common(decode_cmd, args);
  decode_cmd->add_option("--pieces", pieces, "space-separated input pieces")->required();
  decode_cmd->add_option("--prompt", prompt, "text the model conditions on");
  decode_cmd->add_flag("--text", text, "print the detokenized output instead of JSON");

  auto* metrics_cmd = app.add_subcommand("metrics", "recompute metrics and report from saved records");
  add_common(metrics_cmd, args);
  auto* run_cmd = app.add_subcommand("run", "decode every strategy and write records, metrics and report");
  add_common(run_cmd, args);
  auto* sweep_cmd = app.add_subcommand("sweep", "Rep-n against max_length; writes sweep.csv");
  add_common(sweep_cmd, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_lm_cmd) return train_lm(args, output);
    if (*train_emb_cmd) return train_emb(args, output);
    if (*decode_cmd) return decode_one(args, pieces, prompt, text);
    if (*metrics_cmd) return metrics(args);
    if (*run_cmd) return run(args);
    if (*sweep_cmd) return sweep(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
