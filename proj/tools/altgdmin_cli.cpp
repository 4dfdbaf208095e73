#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "altgdmin/experiment.hpp"

namespace fs = std::filesystem;
using namespace altgdmin;

namespace {

struct Overrides {
  std::optional<int> runs;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::vector<Index> sweep;
  bool no_timing = false;

  void apply(ExperimentConfig &cfg) const {
    if (runs) cfg.runs = *runs;
    if (workers) cfg.workers = *workers;
    if (seed) cfg.seed = *seed;
    if (!sweep.empty()) cfg.sweep.values = sweep;
    if (no_timing) cfg.record_timing = false;
  }
};

void report(const std::string &label, const ExperimentResult &res) {
  std::cout << label << ": " << res.summary_path.string() << "\n";
  for (const auto &s : res.summaries) {
    std::cout << "  sweep=" << s.sweep_value << " runs=" << s.runs << " failures=" << s.failures
              << " mean_err=" << s.mean_final_error << " median_err=" << s.median_final_error
              << " mean_iters=" << s.mean_iters << "\n";
  }
}

int run_config(const std::string &config_path, std::optional<std::string> out, const Overrides &ov) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    std::cerr << "error: cannot read config file " << config_path << "\n";
    return 2;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  auto parsed = validate_config(buf.str());
  if (!parsed.ok()) {
    std::cerr << "error: invalid config " << config_path << "\n";
    for (const auto &e : parsed.errors) std::cerr << "  " << e << "\n";
    return 2;
  }
  ExperimentConfig cfg = *parsed.config;
  ov.apply(cfg);
  if (!out) out = cfg.output;
  if (!out) {
    std::cerr << "error: no output directory (pass --out or set \"output\" in the config)\n";
    return 2;
  }
  report("run", run_experiment(cfg, *out));
  return 0;
}

int run_preset(const std::string &name, const fs::path &out, const Overrides &ov) {
  const auto parts = preset(name);
  for (const auto &part : parts) {
    ExperimentConfig cfg = part.config;
    ov.apply(cfg);
    const fs::path dir = parts.size() == 1 ? out : out / part.name;
    report(part.name, run_experiment(cfg, dir));
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Low-rank plus sparse column-wise compressive sensing experiments"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path;
  std::string out_dir;

  const auto add_common = [&](CLI::App *sub) {
    sub->add_option("--workers", ov.workers, "Concurrent runs")->check(CLI::PositiveNumber);
    sub->add_option("--seed", ov.seed, "Base seed; run i uses seed + i");
    sub->add_flag("--no-timing", ov.no_timing, "Write elapsed_ms = 0 so outputs are byte-identical");
  };

  auto *run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  run->add_option("--config", config_path, "Config file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  add_common(run);

  std::vector<CLI::App *> presets;
  for (const char *name : {"fig1", "fig2", "table1"}) {
    auto *sub = app.add_subcommand(name, std::string("Run the ") + name + " preset");
    sub->add_option("--out", out_dir, "Output directory")->required();
    sub->add_option("--runs", ov.runs, "Runs per sweep value")->check(CLI::PositiveNumber);
    sub->add_option("--sweep", ov.sweep, "Replace the swept values");
    add_common(sub);
    presets.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return run_config(config_path, out_dir.empty() ? std::nullopt : std::optional(out_dir), ov);
    for (auto *sub : presets)
      if (sub->parsed()) return run_preset(sub->get_name(), out_dir, ov);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
