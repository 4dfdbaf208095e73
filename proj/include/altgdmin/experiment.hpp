#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "altgdmin/measurement.hpp"
#include "altgdmin/solver.hpp"
#include "altgdmin/synth.hpp"

namespace altgdmin {

enum class SweepParameter { m, rho };

struct Sweep {
  SweepParameter parameter = SweepParameter::m;
  std::vector<Index> values; // empty: the single base value
};

struct ExperimentConfig {
  Index n = 600;
  Index q = 600;
  Index m = 80;
  Index r = 4;
  Index rho = 2;
  SparseValueModel values = UniformValues{6.0};
  EnsembleKind ensemble = EnsembleKind::gaussian;
  GaussianStorage storage = GaussianStorage::stored;
  SolverConfig solver;
  int runs = 10;
  std::uint64_t seed = 1;
  Sweep sweep;
  std::optional<std::string> output;
  int workers = 1;
  bool record_timing = true;

  /// The swept values, or the single base value of the sweep parameter.
  std::vector<Index> sweep_values() const;
};

struct ConfigResult {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> errors; // every violation, not just the first

  bool ok() const { return config.has_value(); }
};

/// Parses a JSON config (all keys optional) and reports every problem found.
ConfigResult validate_config(std::string_view raw_text);

/// Canonical JSON form of a config; validate_config(to_json_text(c)) reproduces c.
std::string to_json_text(const ExperimentConfig &cfg);

struct SweepSummary {
  Index sweep_value = 0;
  int runs = 0;      // successful runs
  int failures = 0;
  double mean_final_error = 0.0;
  double median_final_error = 0.0;
  double mean_iters = 0.0;
};

struct ExperimentResult {
  std::vector<SweepSummary> summaries;
  std::filesystem::path trace_path;
  std::filesystem::path summary_path;
};

/// Runs every (sweep value, run) pair, seed = cfg.seed + run, up to cfg.workers at a
/// time, and writes config.json, trace.csv and summary.csv into out_dir.
///
/// trace.csv:   sweep_value,run,iter,rel_error,objective,elapsed_ms
/// summary.csv: sweep_value,runs,mean_final_error,median_final_error,mean_iters
///
/// A run whose solve throws contributes one trace row with iter = -1 and
/// rel_error = objective = nan, and is excluded from the summary statistics.
ExperimentResult run_experiment(const ExperimentConfig &cfg, const std::filesystem::path &out_dir);

struct NamedConfig {
  std::string name; // subdirectory when a preset has several parts
  ExperimentConfig config;
};

std::vector<NamedConfig> preset(std::string_view name);

} // namespace altgdmin
