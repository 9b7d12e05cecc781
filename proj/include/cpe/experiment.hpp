#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cpe/algorithms.hpp"
#include "cpe/complexity.hpp"
#include "cpe/environment.hpp"
#include "cpe/generators.hpp"
#include "cpe/instance.hpp"

namespace cpe {

using nlohmann::json;

enum class AlgoKind { ccpe_bglm, ccpe_general, lucb, lil_ucb, causal_sr };

inline AlgoKind parse_algo(const std::string& s) {
  if (s == "ccpe_bglm") return AlgoKind::ccpe_bglm;
  if (s == "ccpe_general") return AlgoKind::ccpe_general;
  if (s == "lucb") return AlgoKind::lucb;
  if (s == "lil_ucb" || s == "lil_ucb_heuristic") return AlgoKind::lil_ucb;
  if (s == "causal_sr" || s == "causal_successive_reject") return AlgoKind::causal_sr;
  throw ConfigError("unknown algorithm '" + s + "'");
}

inline const char* to_string(AlgoKind k) {
  switch (k) {
    case AlgoKind::ccpe_bglm: return "ccpe_bglm";
    case AlgoKind::ccpe_general: return "ccpe_general";
    case AlgoKind::lucb: return "lucb";
    case AlgoKind::lil_ucb: return "lil_ucb";
    case AlgoKind::causal_sr: return "causal_sr";
  }
  return "?";
}

struct AlgoSpec {
  AlgoKind kind = AlgoKind::lucb;
  std::string label;
  AlgoConfig config;
  // ccpe_general / causal_sr: drop every sequence (interventional only).
  bool use_sequences = true;
};

enum class RunMode { fixed_confidence, fixed_budget, budget_censored };

inline RunMode parse_mode(const std::string& s) {
  if (s == "fixed_confidence") return RunMode::fixed_confidence;
  if (s == "fixed_budget") return RunMode::fixed_budget;
  if (s == "budget_censored") return RunMode::budget_censored;
  throw ConfigError("unknown mode '" + s + "'");
}

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::fixed_confidence: return "fixed_confidence";
    case RunMode::fixed_budget: return "fixed_budget";
    case RunMode::budget_censored: return "budget_censored";
  }
  return "?";
}

struct InstanceSpec {
  std::string kind;
  json params = json::object();
  std::uint64_t seed = 0;
  std::string file;  // alternative to kind: a saved instance
};

struct ExperimentConfig {
  InstanceSpec instance;
  std::vector<AlgoSpec> algorithms;
  std::size_t trials = 100;
  std::uint64_t master_seed = 1;
  RunMode mode = RunMode::fixed_confidence;
  std::vector<std::uint64_t> budgets;
  std::string csv_path;
  std::string jsonl_path;

  void validate() const {
    if (trials < 1) throw ConfigError("trial count must be at least 1");
    if (algorithms.empty()) throw ConfigError("no algorithms configured");
    if (mode != RunMode::fixed_confidence) {
      if (budgets.empty()) throw ConfigError("budget modes need a list of T values");
      for (std::size_t i = 1; i < budgets.size(); ++i) {
        if (budgets[i] <= budgets[i - 1]) throw ConfigError("T values must be ascending");
      }
    }
    for (const auto& a : algorithms) {
      a.config.validate();
      if (a.kind == AlgoKind::causal_sr && mode == RunMode::fixed_confidence) {
        throw ConfigError("causal_sr needs a budget mode");
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Config parsing

namespace config_io {

inline double num(const json& j, const std::string& key, double dflt, const std::string& where) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number()) throw ParseError(where + "/" + key, "expected a number");
  return j[key].get<double>();
}

inline std::uint64_t uint(const json& j, const std::string& key, std::uint64_t dflt,
                          const std::string& where) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number_unsigned()) throw ParseError(where + "/" + key, "expected a non-negative integer");
  return j[key].get<std::uint64_t>();
}

inline bool boolean(const json& j, const std::string& key, bool dflt, const std::string& where) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_boolean()) throw ParseError(where + "/" + key, "expected a boolean");
  return j[key].get<bool>();
}

inline AlgoSpec algo_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where, "algorithm entry must be an object");
  if (!j.contains("name") || !j["name"].is_string()) throw ParseError(where + "/name", "missing algorithm name");
  AlgoSpec s;
  try {
    s.kind = parse_algo(j["name"].get<std::string>());
  } catch (const ConfigError& e) {
    throw ParseError(where + "/name", e.what());
  }
  s.label = j.contains("label") ? j["label"].get<std::string>() : to_string(s.kind);
  AlgoConfig& c = s.config;
  c.epsilon = num(j, "epsilon", c.epsilon, where);
  c.delta = num(j, "delta", c.delta, where);
  if (j.contains("alpha_o")) c.alpha_o = num(j, "alpha_o", 1.0, where);
  c.alpha_i = num(j, "alpha_i", c.alpha_i, where);
  c.theory_mode = boolean(j, "theory_mode", c.theory_mode, where);
  c.obs_refresh_period = uint(j, "obs_refresh_period", c.obs_refresh_period, where);
  c.count_obs_rounds_for_do = boolean(j, "count_obs_rounds_for_do", c.count_obs_rounds_for_do, where);
  c.lucb_initial_pulls = boolean(j, "lucb_initial_pulls", c.lucb_initial_pulls, where);
  c.round_cap = uint(j, "round_cap", c.round_cap, where);
  s.use_sequences = boolean(j, "use_sequences", true, where);
  if (j.contains("constants")) {
    const json& k = j["constants"];
    const std::string w = where + "/constants";
    AssumptionConstants ac;
    ac.m1 = num(k, "m1", ac.m1, w);
    ac.m2 = num(k, "m2", ac.m2, w);
    ac.kappa = num(k, "kappa", ac.kappa, w);
    ac.eta = num(k, "eta", ac.eta, w);
    ac.c = num(k, "c", ac.c, w);
    ac.d_max = uint(k, "d_max", ac.d_max, w);
    c.constants = ac;
  }
  return s;
}

inline json algo_to_json(const AlgoSpec& s) {
  const AlgoConfig& c = s.config;
  json j = {{"name", to_string(s.kind)},
            {"label", s.label},
            {"epsilon", c.epsilon},
            {"delta", c.delta},
            {"alpha_i", c.alpha_i},
            {"theory_mode", c.theory_mode},
            {"obs_refresh_period", c.obs_refresh_period},
            {"count_obs_rounds_for_do", c.count_obs_rounds_for_do},
            {"lucb_initial_pulls", c.lucb_initial_pulls},
            {"round_cap", c.round_cap},
            {"use_sequences", s.use_sequences}};
  if (c.alpha_o) j["alpha_o"] = *c.alpha_o;
  if (c.constants) {
    const auto& k = *c.constants;
    j["constants"] = {{"m1", k.m1}, {"m2", k.m2}, {"kappa", k.kappa},
                      {"eta", k.eta}, {"c", k.c},   {"d_max", k.d_max}};
  }
  return j;
}

inline ExperimentConfig from_json(const json& j) {
  if (!j.is_object()) throw ParseError("config", "expected an object");
  ExperimentConfig cfg;
  if (!j.contains("instance")) throw ParseError("instance", "missing instance block");
  const json& ji = j["instance"];
  if (ji.contains("file")) {
    cfg.instance.file = ji["file"].get<std::string>();
  } else {
    if (!ji.contains("kind") || !ji["kind"].is_string()) throw ParseError("instance/kind", "missing kind");
    cfg.instance.kind = ji["kind"].get<std::string>();
  }
  if (ji.contains("params")) cfg.instance.params = ji["params"];
  cfg.instance.seed = uint(ji, "seed", 0, "instance");

  if (!j.contains("algorithms") || !j["algorithms"].is_array()) {
    throw ParseError("algorithms", "expected an array");
  }
  for (std::size_t i = 0; i < j["algorithms"].size(); ++i) {
    cfg.algorithms.push_back(algo_from_json(j["algorithms"][i], "algorithms/" + std::to_string(i)));
  }
  cfg.trials = uint(j, "trials", cfg.trials, "config");
  cfg.master_seed = uint(j, "master_seed", cfg.master_seed, "config");
  if (j.contains("mode")) {
    const json& m = j["mode"];
    const std::string type = m.is_string() ? m.get<std::string>()
                                           : (m.contains("type") ? m["type"].get<std::string>() : "");
    try {
      cfg.mode = parse_mode(type);
    } catch (const ConfigError& e) {
      throw ParseError("mode", e.what());
    }
    if (m.is_object() && m.contains("T")) {
      if (!m["T"].is_array()) throw ParseError("mode/T", "expected an array");
      for (const auto& t : m["T"]) {
        if (!t.is_number_unsigned()) throw ParseError("mode/T", "T values must be non-negative integers");
        cfg.budgets.push_back(t.get<std::uint64_t>());
      }
    }
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    if (o.contains("csv")) cfg.csv_path = o["csv"].get<std::string>();
    if (o.contains("jsonl")) cfg.jsonl_path = o["jsonl"].get<std::string>();
  }
  return cfg;
}

inline json to_json(const ExperimentConfig& cfg) {
  json algos = json::array();
  for (const auto& a : cfg.algorithms) algos.push_back(algo_to_json(a));
  json inst = {{"params", cfg.instance.params}, {"seed", cfg.instance.seed}};
  if (cfg.instance.file.empty()) inst["kind"] = cfg.instance.kind;
  else inst["file"] = cfg.instance.file;
  json mode = {{"type", to_string(cfg.mode)}};
  if (!cfg.budgets.empty()) mode["T"] = cfg.budgets;
  json out = {{"instance", inst},   {"algorithms", algos},       {"trials", cfg.trials},
              {"master_seed", cfg.master_seed}, {"mode", mode}};
  if (!cfg.csv_path.empty() || !cfg.jsonl_path.empty()) {
    out["output"] = json::object();
    if (!cfg.csv_path.empty()) out["output"]["csv"] = cfg.csv_path;
    if (!cfg.jsonl_path.empty()) out["output"]["jsonl"] = cfg.jsonl_path;
  }
  return out;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open file");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ":byte " + std::to_string(e.byte), e.what());
  }
}

}  // namespace config_io

inline Instance load_instance(const InstanceSpec& spec) {
  if (!spec.file.empty()) return json_io::instance_from_json(config_io::read_json_file(spec.file));
  return generate_instance(spec.kind, spec.params, spec.seed);
}

// ---------------------------------------------------------------------------
// Running

// Instance plus everything derived once and shared read-only by all trials.
struct PreparedInstance {
  Instance instance;
  std::vector<double> mu;
  double mu_star = 0.0;
  std::optional<AssumptionConstants> bglm_constants;
  std::vector<std::optional<AdmissibleSequence>> no_sequences;

  explicit PreparedInstance(Instance inst) : instance(std::move(inst)) {
    for (const auto& a : instance.actions) mu.push_back(exact_mu(instance.model, a));
    if (mu.empty()) throw ConfigError("instance has no actions");
    mu_star = *std::max_element(mu.begin(), mu.end());
    no_sequences.assign(instance.actions.size(), std::nullopt);
  }

  const AssumptionConstants& constants() {
    if (!bglm_constants) bglm_constants = derive_constants(instance.model);
    return *bglm_constants;
  }

  bool is_error(std::size_t chosen, double epsilon) const {
    return mu_star - mu.at(chosen) > epsilon + 1e-12;
  }
};

struct TrialResult {
  std::string algorithm;
  std::string mode;
  std::string param;
  std::size_t trial = 0;
  std::optional<TrialRecord> record;
  std::string failure;
  bool error = false;
};

// One algorithm run on one trial key; budget is the censoring point (or the
// fixed budget) if set.
inline TrialRecord run_algorithm(const PreparedInstance& prep, const AlgoSpec& spec,
                                 std::optional<std::uint64_t> budget, std::uint64_t trial_key) {
  const Instance& inst = prep.instance;
  ModelEnvironment env(inst.model, inst.actions, trial_key);
  AlgoConfig cfg = spec.config;
  if (budget) cfg = censor_at(cfg, *budget);
  const auto& seqs = spec.use_sequences ? inst.sequences : prep.no_sequences;
  switch (spec.kind) {
    case AlgoKind::ccpe_bglm:
      if (!cfg.constants) {
        if (!prep.bglm_constants) throw ConfigError("BGLM constants were not prepared");
        cfg.constants = prep.bglm_constants;
      }
      return ccpe_bglm(env, inst.graph(), inst.actions, inst.links(), cfg);
    case AlgoKind::ccpe_general:
      return ccpe_general(env, inst.graph(), inst.actions, seqs, cfg);
    case AlgoKind::lucb:
      return lucb(env, cfg);
    case AlgoKind::lil_ucb:
      return lil_ucb_heuristic(env, cfg);
    case AlgoKind::causal_sr:
      return causal_successive_reject(env, inst.graph(), inst.actions, seqs, cfg);
  }
  throw ConfigError("unknown algorithm");
}

inline std::uint64_t trial_key(std::uint64_t master_seed, std::size_t trial) {
  return derive_key(master_seed, trial);
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string param_label(const AlgoSpec& a, std::optional<std::uint64_t> t) {
  if (t) return "T=" + std::to_string(*t);
  return "eps=" + format_double(a.config.epsilon) + ";delta=" + format_double(a.config.delta);
}

// A unit of work: (algorithm, budget) cell.
struct Cell {
  std::size_t algo = 0;
  std::optional<std::uint64_t> budget;
};

inline std::vector<Cell> cells(const ExperimentConfig& cfg) {
  std::vector<Cell> out;
  for (std::size_t a = 0; a < cfg.algorithms.size(); ++a) {
    if (cfg.mode == RunMode::fixed_confidence) {
      out.push_back({a, std::nullopt});
    } else {
      for (auto t : cfg.budgets) out.push_back({a, t});
    }
  }
  return out;
}

inline TrialResult run_cell_trial(const ExperimentConfig& cfg, const PreparedInstance& prep,
                                  const Cell& cell, std::size_t trial) {
  const AlgoSpec& spec = cfg.algorithms[cell.algo];
  TrialResult r;
  r.algorithm = spec.label;
  r.mode = to_string(cfg.mode);
  r.param = param_label(spec, cell.budget);
  r.trial = trial;
  try {
    r.record = run_algorithm(prep, spec, cell.budget, trial_key(cfg.master_seed, trial));
    r.error = prep.is_error(r.record->chosen, spec.config.epsilon);
  } catch (const std::exception& e) {
    r.failure = e.what();
  }
  return r;
}

struct AggregateRow {
  std::string algorithm;
  std::string mode;
  std::string param;
  std::size_t trials = 0;
  double error_prob = 0.0;
  double mean_rounds = 0.0;
  double median_rounds = 0.0;
  double std_rounds = 0.0;
  std::string flags;
};

inline AggregateRow aggregate(const std::vector<TrialResult>& rs) {
  AggregateRow row;
  if (rs.empty()) return row;
  row.algorithm = rs.front().algorithm;
  row.mode = rs.front().mode;
  row.param = rs.front().param;
  row.trials = rs.size();
  std::vector<double> rounds;
  std::size_t errors = 0, failed = 0, capped = 0, budget = 0, merges = 0;
  for (const auto& r : rs) {
    if (!r.record) {
      ++failed;
      continue;
    }
    rounds.push_back(static_cast<double>(r.record->rounds));
    if (r.error) ++errors;
    if (r.record->stop_reason == StopReason::round_cap) ++capped;
    if (r.record->stop_reason == StopReason::budget) ++budget;
    merges += r.record->empty_merge_events;
  }
  if (!rounds.empty()) {
    const double n = static_cast<double>(rounds.size());
    row.error_prob = static_cast<double>(errors) / n;
    double s = 0.0;
    for (double v : rounds) s += v;
    row.mean_rounds = s / n;
    double ss = 0.0;
    for (double v : rounds) ss += (v - row.mean_rounds) * (v - row.mean_rounds);
    row.std_rounds = rounds.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    std::sort(rounds.begin(), rounds.end());
    const std::size_t h = rounds.size() / 2;
    row.median_rounds = rounds.size() % 2 ? rounds[h] : 0.5 * (rounds[h - 1] + rounds[h]);
  } else {
    row.error_prob = std::nan("");
    row.mean_rounds = row.median_rounds = row.std_rounds = std::nan("");
  }
  std::vector<std::string> flags;
  if (failed) flags.push_back("failed=" + std::to_string(failed));
  if (capped) flags.push_back("round_cap=" + std::to_string(capped));
  if (budget && row.mode == "fixed_confidence") flags.push_back("censored=" + std::to_string(budget));
  if (merges) flags.push_back("empty_merge=" + std::to_string(merges));
  for (std::size_t i = 0; i < flags.size(); ++i) row.flags += (i ? ";" : "") + flags[i];
  return row;
}

inline const char* kCsvHeader =
    "algorithm,mode,param,trials,error_prob,mean_rounds,median_rounds,std_rounds,flags";

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string to_csv(const std::vector<AggregateRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += csv_field(r.algorithm) + "," + r.mode + "," + csv_field(r.param) + "," +
           std::to_string(r.trials) + "," + format_double(r.error_prob) + "," +
           format_double(r.mean_rounds) + "," + format_double(r.median_rounds) + "," +
           format_double(r.std_rounds) + "," + csv_field(r.flags) + "\n";
  }
  return out;
}

inline json trial_to_json(const TrialResult& r, const Instance& inst) {
  json j = {{"algorithm", r.algorithm}, {"mode", r.mode}, {"param", r.param}, {"trial", r.trial}};
  if (!r.record) {
    j["failure"] = r.failure;
    return j;
  }
  const TrialRecord& t = *r.record;
  j["chosen"] = t.chosen;
  j["chosen_label"] = inst.actions.at(t.chosen).label(inst.graph());
  j["error"] = r.error;
  j["rounds"] = t.rounds;
  j["observations"] = t.observations;
  j["pulls"] = t.pulls;
  j["stop_reason"] = to_string(t.stop_reason);
  j["empty_merge_events"] = t.empty_merge_events;
  j["iterations"] = t.iterations;
  return j;
}

inline TrialResult trial_from_json(const json& j) {
  TrialResult r;
  try {
    r.algorithm = j.at("algorithm").get<std::string>();
    r.mode = j.at("mode").get<std::string>();
    r.param = j.at("param").get<std::string>();
    r.trial = j.at("trial").get<std::size_t>();
    if (j.contains("failure")) {
      r.failure = j["failure"].get<std::string>();
      return r;
    }
    TrialRecord t;
    t.chosen = j.at("chosen").get<std::size_t>();
    t.rounds = j.at("rounds").get<std::uint64_t>();
    t.observations = j.at("observations").get<std::uint64_t>();
    t.pulls = j.at("pulls").get<std::vector<std::uint64_t>>();
    t.stop_reason = parse_stop_reason(j.at("stop_reason").get<std::string>());
    t.empty_merge_events = j.at("empty_merge_events").get<std::uint64_t>();
    t.iterations = j.at("iterations").get<std::uint64_t>();
    r.error = j.at("error").get<bool>();
    r.record = t;
  } catch (const json::exception& e) {
    throw ParseError("trial record", e.what());
  }
  return r;
}

struct ExperimentResult {
  std::vector<AggregateRow> rows;
  std::vector<TrialResult> trials;  // cell-major, trial-minor

  std::string csv() const { return to_csv(rows); }
  std::string jsonl(const Instance& inst) const {
    std::string out;
    for (const auto& t : trials) out += trial_to_json(t, inst).dump() + "\n";
    return out;
  }
};

inline PreparedInstance prepare(const ExperimentConfig& cfg) {
  PreparedInstance prep(load_instance(cfg.instance));
  for (const auto& a : cfg.algorithms) {
    if (a.kind == AlgoKind::ccpe_bglm && !a.config.constants) prep.constants();
  }
  return prep;
}

// Runs every (algorithm, T) cell over all trials. Trials of a cell are
// independent and parallelized over `jobs` threads; results land in fixed
// slots, so output does not depend on scheduling.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const PreparedInstance& prep,
                                       std::size_t jobs = 1) {
  cfg.validate();
  const std::vector<Cell> cs = cells(cfg);
  const std::size_t total = cs.size() * cfg.trials;
  ExperimentResult res;
  res.trials.resize(total);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      res.trials[i] = run_cell_trial(cfg, prep, cs[i / cfg.trials], i % cfg.trials);
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, total));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t c = 0; c < cs.size(); ++c) {
    const auto first = res.trials.begin() + static_cast<std::ptrdiff_t>(c * cfg.trials);
    res.rows.push_back(aggregate(std::vector<TrialResult>(first, first + static_cast<std::ptrdiff_t>(cfg.trials))));
  }
  return res;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t jobs = 1) {
  const PreparedInstance prep = prepare(cfg);
  return run_experiment(cfg, prep, jobs);
}

// Every cell of one trial index, in the same order run_experiment uses.
inline std::vector<TrialResult> replay_trial(const ExperimentConfig& cfg,
                                             const PreparedInstance& prep, std::size_t trial) {
  cfg.validate();
  if (trial >= cfg.trials) throw ConfigError("trial index out of range");
  std::vector<TrialResult> out;
  for (const auto& c : cells(cfg)) out.push_back(run_cell_trial(cfg, prep, c, trial));
  return out;
}

// ---------------------------------------------------------------------------
// Grid search

struct GridCell {
  double alpha_o = 0.0;
  double alpha_i = 0.0;
  double error_prob = 0.0;
  double mean_rounds = 0.0;
};

struct GridResult {
  AlgoSpec best;
  std::vector<GridCell> table;
};

// Evaluates algorithm `which` of the config at every (alpha_o, alpha_i) pair
// with `pilot_trials` trials; the score is the error probability averaged
// over the config's T values. Ties go to the smaller alpha_o, then alpha_i.
inline GridResult grid_search(const ExperimentConfig& cfg, const PreparedInstance& prep,
                              std::size_t which, std::vector<double> alpha_o,
                              std::vector<double> alpha_i, std::size_t pilot_trials,
                              std::size_t jobs = 1) {
  if (which >= cfg.algorithms.size()) throw ConfigError("algorithm index out of range");
  if (alpha_o.empty() || alpha_i.empty()) throw ConfigError("empty grid");
  std::sort(alpha_o.begin(), alpha_o.end());
  std::sort(alpha_i.begin(), alpha_i.end());
  GridResult out;
  bool have = false;
  double best_err = 0.0;
  for (double ao : alpha_o) {
    for (double ai : alpha_i) {
      ExperimentConfig c = cfg;
      AlgoSpec spec = cfg.algorithms[which];
      spec.config.alpha_o = ao;
      spec.config.alpha_i = ai;
      c.algorithms = {spec};
      c.trials = pilot_trials;
      const ExperimentResult r = run_experiment(c, prep, jobs);
      GridCell cell{ao, ai, 0.0, 0.0};
      for (const auto& row : r.rows) {
        cell.error_prob += row.error_prob;
        cell.mean_rounds += row.mean_rounds;
      }
      cell.error_prob /= static_cast<double>(r.rows.size());
      cell.mean_rounds /= static_cast<double>(r.rows.size());
      out.table.push_back(cell);
      if (!have || cell.error_prob < best_err) {
        have = true;
        best_err = cell.error_prob;
        out.best = spec;
      }
    }
  }
  return out;
}

inline std::string grid_csv(const GridResult& g) {
  std::string out = "alpha_o,alpha_i,error_prob,mean_rounds\n";
  for (const auto& c : g.table) {
    out += format_double(c.alpha_o) + "," + format_double(c.alpha_i) + "," +
           format_double(c.error_prob) + "," + format_double(c.mean_rounds) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prediction report

inline json predict_report(const Instance& inst, double epsilon, double delta) {
  const CausalGraph& g = inst.graph();
  const GapReport gr = gaps(inst.model, inst.actions, epsilon);
  std::vector<double> qg;
  for (std::size_t a = 0; a < inst.actions.size(); ++a) {
    qg.push_back(q_general(inst.model, inst.actions[a], inst.sequences[a]));
  }
  const std::size_t n = inst.actions.size();
  auto block = [&](const std::vector<double>& q) {
    const HardnessProfile p = HardnessProfile::make(q, gr.delta, epsilon);
    const std::size_t m = observation_threshold(q);
    const std::size_t me = gap_threshold(p);
    json order = json::array();
    for (std::size_t a : p.order) order.push_back(a);
    return json{{"m", m},
                {"m_eps_delta", me},
                {"H_m_eps_delta", h_r(p, me)},
                {"H_all", naive_hardness(p)},
                {"order", order},
                {"predicted_ccpe", predict_sample_complexity(p, n, delta)},
                {"predicted_lucb", naive_hardness(p) * std::log(static_cast<double>(n) *
                                                                naive_hardness(p) / delta)}};
  };
  json actions = json::array();
  for (std::size_t a = 0; a < n; ++a) {
    actions.push_back({{"label", inst.actions[a].label(g)},
                       {"mu", gr.mu[a]},
                       {"gap", gr.delta[a]},
                       {"q_general", qg[a]},
                       {"has_sequence", inst.sequences[a].has_value()}});
  }
  json out = {{"kind", inst.kind},    {"actions_count", n}, {"epsilon", epsilon},
              {"delta", delta},       {"best", gr.best},    {"best_label", inst.actions[gr.best].label(g)},
              {"delta_min", gr.delta_min}};
  out["general"] = block(qg);
  if (inst.model.is_bglm()) {
    const std::size_t d = std::max<std::size_t>(1, g.max_in_degree());
    std::vector<double> ql;
    for (std::size_t a = 0; a < n; ++a) {
      ql.push_back(q_bglm(g, inst.actions[a], d));
      actions[a]["q_bglm"] = ql.back();
    }
    out["bglm"] = block(ql);
  }
  out["actions"] = actions;
  if (inst.xi) {
    const auto null_arm = find_null_action(inst.actions);
    if (null_arm) {
      const HardnessProfile p = HardnessProfile::make(qg, gr.delta, epsilon);
      XiInstance xi = *inst.xi;
      xi.epsilon = epsilon;
      try {
        out["lower_bound"] = lower_bound_value(p, *null_arm, delta, xi);
      } catch (const InstanceClassError& e) {
        out["lower_bound_error"] = e.what();
      }
    }
  }
  return out;
}

}  // namespace cpe
