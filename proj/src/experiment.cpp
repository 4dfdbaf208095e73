#include "altgdmin/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "altgdmin/csv.hpp"

namespace altgdmin {

using nlohmann::json;

namespace {

std::string_view to_string(SweepParameter p) { return p == SweepParameter::rho ? "rho" : "m"; }

/// Reads typed fields out of one JSON object, collecting errors instead of throwing.
class FieldReader {
public:
  FieldReader(const json &obj, std::string prefix, std::vector<std::string> &errors)
    : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {}

  bool has(const char *key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  template <class Int>
    requires std::integral<Int>
  void integer(const char *key, Int &out) {
    if (!has(key)) return;
    const json &v = obj_.at(key);
    if (!v.is_number_integer()) return fail(key, "expected an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned() || v.get<std::int64_t>() >= 0) out = v.get<Int>();
      else fail(key, "expected a nonnegative integer");
    } else {
      const auto wide = v.get<std::int64_t>();
      if (wide < std::numeric_limits<Int>::min() || wide > std::numeric_limits<Int>::max())
        return fail(key, "integer out of range");
      out = static_cast<Int>(wide);
    }
  }

  void number(const char *key, double &out) {
    if (!has(key)) return;
    const json &v = obj_.at(key);
    if (!v.is_number()) return fail(key, "expected a number");
    out = v.get<double>();
  }

  void boolean(const char *key, bool &out) {
    if (!has(key)) return;
    const json &v = obj_.at(key);
    if (!v.is_boolean()) return fail(key, "expected true or false");
    out = v.get<bool>();
  }

  template <class Parse, class Out> void enumeration(const char *key, Out &out, Parse parse) {
    if (!has(key)) return;
    const json &v = obj_.at(key);
    if (!v.is_string()) return fail(key, "expected a string");
    try {
      out = parse(v.get<std::string>());
    } catch (const std::exception &e) {
      fail(key, e.what());
    }
  }

  const json *object(const char *key) {
    if (!has(key)) return nullptr;
    const json &v = obj_.at(key);
    if (!v.is_object()) {
      fail(key, "expected an object");
      return nullptr;
    }
    return &v;
  }

  const json *raw(const char *key) { return has(key) ? &obj_.at(key) : nullptr; }

  void fail(const char *key, const std::string &msg) { errors_.push_back(path(key) + ": " + msg); }

  std::string path(const char *key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  void reject_unknown() {
    for (const auto &[key, _] : obj_.items())
      if (!seen_.contains(key)) errors_.push_back("unknown key '" + path(key.c_str()) + "'");
  }

private:
  const json &obj_;
  std::string prefix_;
  std::vector<std::string> &errors_;
  std::set<std::string> seen_;
};

void read_values(const json &obj, SparseValueModel &out, std::vector<std::string> &errors) {
  FieldReader rd(obj, "values", errors);
  std::string model = std::holds_alternative<SetValues>(out) ? "S2" : "S1";
  rd.enumeration("model", model, [](const std::string &s) {
    if (s != "S1" && s != "S2") throw std::invalid_argument("expected \"S1\" or \"S2\"");
    return s;
  });
  if (model == "S1") {
    UniformValues u;
    rd.number("alpha", u.alpha);
    if (rd.has("set")) rd.fail("set", "only valid for model S2");
    out = u;
  } else {
    SetValues s;
    if (const json *set = rd.raw("set")) {
      if (!set->is_array()) {
        rd.fail("set", "expected an array of numbers");
      } else {
        s.values.clear();
        for (const auto &v : *set) {
          if (!v.is_number()) {
            rd.fail("set", "expected an array of numbers");
            break;
          }
          s.values.push_back(v.get<double>());
        }
      }
    }
    if (rd.has("alpha")) rd.fail("alpha", "only valid for model S1");
    out = s;
  }
  rd.reject_unknown();
}

void read_solver(const json &obj, SolverConfig &s, std::vector<std::string> &errors) {
  FieldReader rd(obj, "solver", errors);
  rd.integer("t_max", s.t_max);
  rd.integer("tau0_max", s.tau0_max);
  rd.integer("tau_max", s.tau_max);
  rd.number("eta_scale", s.eta_scale);
  rd.integer("rho_max", s.rho_max);
  if (const json *rank = rd.raw("rank")) {
    if (rank->is_string() && rank->get<std::string>() == "auto") s.rank.fixed.reset();
    else if (rank->is_number_integer()) s.rank.fixed = rank->get<Index>();
    else rd.fail("rank", "expected a positive integer or \"auto\"");
  }
  rd.number("energy_threshold", s.rank.energy_threshold);
  rd.enumeration("mode", s.mode, [](const std::string &v) { return parse_solve_mode(v); });
  rd.enumeration("step_rule", s.step_rule, [](const std::string &v) { return parse_step_rule(v); });
  rd.enumeration("eta_norm", s.eta_norm, [](const std::string &v) { return parse_step_norm(v); });
  if (const json *tol = rd.raw("early_exit_tol")) {
    if (tol->is_null()) s.early_exit_tol.reset();
    else if (tol->is_number()) s.early_exit_tol = tol->get<double>();
    else rd.fail("early_exit_tol", "expected a number or null");
  }
  rd.integer("power_iterations", s.power_iterations);
  rd.number("power_tolerance", s.power_tolerance);
  rd.integer("extra_probes", s.extra_probes);
  rd.integer("threads", s.threads);
  rd.reject_unknown();
}

void read_sweep(const json &obj, Sweep &sweep, std::vector<std::string> &errors) {
  FieldReader rd(obj, "sweep", errors);
  rd.enumeration("parameter", sweep.parameter, [](const std::string &v) {
    if (v == "m") return SweepParameter::m;
    if (v == "rho") return SweepParameter::rho;
    throw std::invalid_argument("expected \"m\" or \"rho\"");
  });
  if (const json *vals = rd.raw("values")) {
    sweep.values.clear();
    if (!vals->is_array()) {
      rd.fail("values", "expected an array of integers");
    } else {
      for (const auto &v : *vals) {
        if (!v.is_number_integer()) {
          rd.fail("values", "expected an array of integers");
          break;
        }
        sweep.values.push_back(v.get<Index>());
      }
    }
  }
  rd.reject_unknown();
}

void check_semantics(const ExperimentConfig &c, std::vector<std::string> &errors) {
  const auto err = [&errors](std::string s) { errors.push_back(std::move(s)); };
  if (c.n < 1) err("n must be >= 1 (got " + std::to_string(c.n) + ")");
  if (c.q < 1) err("q must be >= 1 (got " + std::to_string(c.q) + ")");
  if (c.ensemble == EnsembleKind::identity)
    err("ensemble: the identity ensemble is test-only and not allowed in experiments");
  if (c.runs < 1) err("runs must be >= 1 (got " + std::to_string(c.runs) + ")");
  if (c.workers < 1) err("workers must be >= 1 (got " + std::to_string(c.workers) + ")");

  const auto check_m = [&](Index m, const std::string &where) {
    if (m < 1) err(where + " must be >= 1 (got " + std::to_string(m) + ")");
    else if (m >= c.n)
      err(where + " (" + std::to_string(m) + ") must be less than n (" + std::to_string(c.n) + ")");
  };
  const auto check_rho = [&](Index rho, const std::string &where) {
    if (rho < 0 || rho > c.n)
      err(where + " must lie in [0, n] (got " + std::to_string(rho) + ")");
  };

  if (c.sweep.parameter == SweepParameter::m && !c.sweep.values.empty()) {
    for (Index v : c.sweep.values) check_m(v, "sweep value m");
  } else {
    check_m(c.m, "m");
  }
  if (c.sweep.parameter == SweepParameter::rho && !c.sweep.values.empty()) {
    for (Index v : c.sweep.values) check_rho(v, "sweep value rho");
  } else {
    check_rho(c.rho, "rho");
  }
  if (c.r < 1 || c.r > std::min(c.n, c.q))
    err("r must lie in [1, min(n, q)] (got " + std::to_string(c.r) + ")");

  GenSpec probe{c.n, c.q, 1, 0, c.values, 0};
  for (const auto &v : probe.violations())
    if (v.starts_with("alpha") || v.starts_with("value set")) err("values: " + v);

  for (const auto &v : c.solver.violations()) err("solver." + v);
  if (c.solver.rho_max > c.n) err("solver.rho_max must be <= n");
  if (c.solver.rank.fixed) {
    Index min_m = c.m;
    if (c.sweep.parameter == SweepParameter::m && !c.sweep.values.empty())
      min_m = *std::ranges::min_element(c.sweep.values);
    if (*c.solver.rank.fixed > std::min({c.n, c.q, min_m}))
      err("solver.rank must be <= min(n, q, m)");
  }
}

json values_json(const SparseValueModel &v) {
  if (const auto *u = std::get_if<UniformValues>(&v)) return {{"model", "S1"}, {"alpha", u->alpha}};
  return {{"model", "S2"}, {"set", std::get<SetValues>(v).values}};
}

json solver_json(const SolverConfig &s) {
  json j;
  j["t_max"] = s.t_max;
  j["tau0_max"] = s.tau0_max;
  j["tau_max"] = s.tau_max;
  j["eta_scale"] = s.eta_scale;
  j["rho_max"] = s.rho_max;
  j["rank"] = s.rank.fixed ? json(*s.rank.fixed) : json("auto");
  j["energy_threshold"] = s.rank.energy_threshold;
  j["mode"] = std::string(to_string(s.mode));
  j["step_rule"] = std::string(to_string(s.step_rule));
  j["eta_norm"] = std::string(to_string(s.eta_norm));
  j["early_exit_tol"] = s.early_exit_tol ? json(*s.early_exit_tol) : json(nullptr);
  j["power_iterations"] = s.power_iterations;
  j["power_tolerance"] = s.power_tolerance;
  j["extra_probes"] = s.extra_probes;
  j["threads"] = s.threads;
  return j;
}

} // namespace

std::vector<Index> ExperimentConfig::sweep_values() const {
  if (!sweep.values.empty()) return sweep.values;
  return {sweep.parameter == SweepParameter::rho ? rho : m};
}

ConfigResult validate_config(std::string_view raw_text) {
  ConfigResult result;
  json root;
  try {
    root = json::parse(raw_text.begin(), raw_text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error &e) {
    result.errors.push_back(std::string("malformed config: ") + e.what());
    return result;
  }
  if (root.is_null()) root = json::object();
  if (!root.is_object()) {
    result.errors.push_back("malformed config: top level must be an object");
    return result;
  }

  ExperimentConfig cfg;
  auto &errors = result.errors;
  FieldReader rd(root, "", errors);
  rd.integer("n", cfg.n);
  rd.integer("q", cfg.q);
  rd.integer("m", cfg.m);
  rd.integer("r", cfg.r);
  rd.integer("rho", cfg.rho);
  if (const json *v = rd.object("values")) read_values(*v, cfg.values, errors);
  rd.enumeration("ensemble", cfg.ensemble, [](const std::string &v) { return parse_ensemble_kind(v); });
  rd.enumeration("gaussian_storage", cfg.storage, [](const std::string &v) {
    if (v == "stored") return GaussianStorage::stored;
    if (v == "regenerate") return GaussianStorage::regenerate;
    throw std::invalid_argument("expected \"stored\" or \"regenerate\"");
  });
  if (const json *s = rd.object("solver")) read_solver(*s, cfg.solver, errors);
  rd.integer("runs", cfg.runs);
  rd.integer("seed", cfg.seed);
  if (const json *s = rd.object("sweep")) read_sweep(*s, cfg.sweep, errors);
  if (const json *out = rd.raw("output")) {
    if (out->is_string()) cfg.output = out->get<std::string>();
    else if (!out->is_null()) rd.fail("output", "expected a string path");
  }
  rd.integer("workers", cfg.workers);
  rd.boolean("record_timing", cfg.record_timing);
  rd.reject_unknown();

  // fields that failed to parse keep their defaults, so range checks still apply
  check_semantics(cfg, errors);
  if (errors.empty()) result.config = std::move(cfg);
  return result;
}

std::string to_json_text(const ExperimentConfig &c) {
  json j;
  j["n"] = c.n;
  j["q"] = c.q;
  j["m"] = c.m;
  j["r"] = c.r;
  j["rho"] = c.rho;
  j["values"] = values_json(c.values);
  j["ensemble"] = std::string(to_string(c.ensemble));
  j["gaussian_storage"] = c.storage == GaussianStorage::regenerate ? "regenerate" : "stored";
  j["solver"] = solver_json(c.solver);
  j["runs"] = c.runs;
  j["seed"] = c.seed;
  j["sweep"] = {{"parameter", std::string(to_string(c.sweep.parameter))},
                {"values", c.sweep.values}};
  j["output"] = c.output ? json(*c.output) : json(nullptr);
  j["workers"] = c.workers;
  j["record_timing"] = c.record_timing;
  return j.dump(2) + "\n";
}

namespace {

struct RunOutcome {
  bool ok = false;
  std::vector<IterationRecord> records;
};

template <FieldScalar T>
std::vector<IterationRecord> solve_once(const ExperimentConfig &cfg, const GenSpec &spec, Index m,
                                        std::uint64_t seed) {
  auto [instance, truth] = gen_instance<T>(spec, cfg.ensemble, m, seed, cfg.storage);
  SolverConfig solver = cfg.solver;
  solver.seed = seed;
  return solve(instance, solver, &truth).records;
}

RunOutcome run_one(const ExperimentConfig &cfg, Index sweep_value, int run) {
  Index m = cfg.m, rho = cfg.rho;
  (cfg.sweep.parameter == SweepParameter::m ? m : rho) = sweep_value;
  const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(run);
  const GenSpec spec{cfg.n, cfg.q, cfg.r, rho, cfg.values, seed};

  RunOutcome out;
  try {
    out.records = cfg.ensemble == EnsembleKind::fourier ? solve_once<Complex>(cfg, spec, m, seed)
                                                        : solve_once<Real>(cfg, spec, m, seed);
    out.ok = true;
  } catch (const std::exception &e) {
    static std::mutex log_mutex;
    std::lock_guard lock(log_mutex);
    std::cerr << "run " << run << " (" << to_string(cfg.sweep.parameter) << "=" << sweep_value
              << ") failed: " << e.what() << "\n";
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::ranges::sort(v);
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig &cfg, const std::filesystem::path &out_dir) {
  {
    std::vector<std::string> errors;
    check_semantics(cfg, errors);
    if (!errors.empty()) throw std::invalid_argument("invalid experiment config: " + errors.front());
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " + ec.message());
  {
    std::ofstream out(out_dir / "config.json", std::ios::binary | std::ios::trunc);
    out << to_json_text(cfg);
    if (!out) throw std::runtime_error("cannot write into output directory " + out_dir.string());
  }

  const auto values = cfg.sweep_values();
  const std::size_t runs = static_cast<std::size_t>(cfg.runs);
  std::vector<RunOutcome> outcomes(values.size() * runs);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t task = next++; task < outcomes.size(); task = next++)
      outcomes[task] = run_one(cfg, values[task / runs], static_cast<int>(task % runs));
  };
  const std::size_t nworkers = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), outcomes.size());
  if (nworkers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < nworkers; ++w) pool.emplace_back(worker);
  }

  csv::Table trace{{"sweep_value", "run", "iter", "rel_error", "objective", "elapsed_ms"}, {}};
  csv::Table summary{{"sweep_value", "runs", "mean_final_error", "median_final_error", "mean_iters"}, {}};
  ExperimentResult result;
  const auto fmt = csv::format_double;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t v = 0; v < values.size(); ++v) {
    const std::string sv = std::to_string(values[v]);
    SweepSummary s;
    s.sweep_value = values[v];
    std::vector<double> finals;
    double iters = 0.0;
    for (std::size_t run = 0; run < runs; ++run) {
      const auto &o = outcomes[v * runs + run];
      if (!o.ok) {
        ++s.failures;
        trace.rows.push_back({sv, std::to_string(run), "-1", fmt(nan), fmt(nan), "0"});
        continue;
      }
      for (const auto &rec : o.records)
        trace.rows.push_back({sv, std::to_string(run), std::to_string(rec.iteration),
                              fmt(rec.rel_error.value_or(nan)), fmt(rec.objective),
                              fmt(cfg.record_timing ? rec.elapsed_ms : 0.0)});
      finals.push_back(o.records.back().rel_error.value_or(nan));
      iters += o.records.back().iteration;
    }
    s.runs = static_cast<int>(finals.size());
    double sum = 0.0;
    for (double f : finals) sum += f;
    s.mean_final_error = finals.empty() ? nan : sum / static_cast<double>(finals.size());
    s.median_final_error = median(finals);
    s.mean_iters = finals.empty() ? nan : iters / static_cast<double>(finals.size());
    summary.rows.push_back({sv, std::to_string(s.runs), fmt(s.mean_final_error),
                            fmt(s.median_final_error), fmt(s.mean_iters)});
    result.summaries.push_back(s);
  }

  result.trace_path = out_dir / "trace.csv";
  result.summary_path = out_dir / "summary.csv";
  csv::write(result.trace_path, trace);
  csv::write(result.summary_path, summary);
  return result;
}

std::vector<NamedConfig> preset(std::string_view name) {
  ExperimentConfig base;
  base.runs = 10;
  base.seed = 1;
  base.values = UniformValues{6.0};
  base.solver.t_max = 200;
  base.solver.tau0_max = 10;
  base.solver.tau_max = 3;
  base.solver.eta_scale = 0.14;
  base.solver.rank = RankChoice::automatic(0.65);

  if (name == "fig1") {
    ExperimentConfig c = base;
    c.n = 600, c.q = 600, c.m = 80, c.r = 4;
    c.ensemble = EnsembleKind::gaussian;
    c.solver.rho_max = 7;
    c.solver.step_rule = StepRule::niht_support;
    c.sweep = {SweepParameter::rho, {2, 5, 6, 7}};
    c.rho = 2;
    return {{"fig1", c}};
  }
  if (name == "fig2") {
    ExperimentConfig c = base;
    c.n = 600, c.q = 600, c.m = 80, c.r = 4, c.rho = 2;
    c.ensemble = EnsembleKind::gaussian;
    c.solver.rho_max = 5;
    c.solver.step_rule = StepRule::niht_support;
    ExperimentConfig s2 = c;
    s2.values = SetValues{};
    return {{"s1", c}, {"s2", s2}};
  }
  if (name == "table1") {
    ExperimentConfig c = base;
    c.n = 400, c.q = 400, c.m = 80, c.r = 4, c.rho = 2;
    c.ensemble = EnsembleKind::fourier;
    c.solver.rho_max = 5;
    c.solver.t_max = 10;
    c.solver.step_rule = StepRule::as_written;
    c.sweep = {SweepParameter::m, {40, 60, 80, 100, 150, 200, 250, 300}};
    // the energy rule drops to r = 3 here once m >= 250
    c.solver.rank = RankChoice::of(c.r);
    ExperimentConfig lr = c;
    lr.solver.mode = SolveMode::lr_only;
    return {{"lps", c}, {"lr_only", lr}};
  }
  throw std::invalid_argument("unknown preset '" + std::string(name) + "' (expected fig1, fig2 or table1)");
}

} // namespace altgdmin
