#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpe/experiment.hpp"

namespace {

using nlohmann::json;

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cpe::ConfigError("cannot write " + path);
  out << text;
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> mode;
  std::string out;
  std::size_t jobs = 1;
};

cpe::ExperimentConfig load_config(const std::string& path, const Overrides& o) {
  cpe::ExperimentConfig cfg = cpe::config_io::from_json(cpe::config_io::read_json_file(path));
  if (o.seed) cfg.master_seed = *o.seed;
  if (o.trials) cfg.trials = *o.trials;
  if (o.mode) cfg.mode = cpe::parse_mode(*o.mode);
  if (!o.out.empty()) {
    cfg.csv_path = o.out + ".csv";
    cfg.jsonl_path = o.out + ".jsonl";
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--seed", o.seed, "Master seed");
  app->add_option("--trials", o.trials, "Number of trials");
  app->add_option("--mode", o.mode, "fixed_confidence | fixed_budget | budget_censored");
  app->add_option("--out", o.out, "Output path prefix");
  app->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Combinatorial pure exploration for causal bandits"};
  app.require_subcommand(1);

  // gen
  std::string kind, params_text = "{}", gen_out;
  std::uint64_t gen_seed = 0;
  auto* gen = app.add_subcommand("gen", "Generate an instance and write it as JSON");
  gen->add_option("kind", kind, "Instance family")->required();
  gen->add_option("--params", params_text, "Family parameters as a JSON object");
  gen->add_option("--seed", gen_seed, "Structure seed");
  gen->add_option("--out", gen_out, "Output file (default stdout)");

  // predict
  std::string predict_in, predict_out;
  double eps = 0.0, delta = 0.1;
  auto* predict = app.add_subcommand("predict", "Threshold and hardness report for an instance");
  predict->add_option("instance", predict_in, "Instance JSON file")->required();
  predict->add_option("--epsilon", eps, "Accuracy parameter");
  predict->add_option("--delta", delta, "Confidence parameter");
  predict->add_option("--out", predict_out, "Output file (default stdout)");

  // run
  std::string run_cfg;
  Overrides run_o;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", run_cfg, "Experiment config JSON")->required();
  add_common(run, run_o);

  // tune
  std::string tune_cfg;
  Overrides tune_o;
  std::vector<double> grid_o, grid_i;
  std::size_t tune_algo = 0, pilot = 20;
  auto* tune = app.add_subcommand("tune", "Grid search over alpha_o x alpha_i");
  tune->add_option("config", tune_cfg, "Experiment config JSON")->required();
  tune->add_option("--alpha-o", grid_o, "alpha_o grid (default 0.05..1 step 0.05)");
  tune->add_option("--alpha-i", grid_i, "alpha_i grid (default 0.05..1 step 0.05)");
  tune->add_option("--algorithm", tune_algo, "Index of the algorithm in the config");
  tune->add_option("--pilot", pilot, "Pilot trials per cell")->check(CLI::PositiveNumber);
  add_common(tune, tune_o);

  // replay
  std::string replay_cfg;
  Overrides replay_o;
  std::size_t replay_trial = 0;
  auto* replay = app.add_subcommand("replay", "Regenerate the records of one trial");
  replay->add_option("config", replay_cfg, "Experiment config JSON")->required();
  replay->add_option("--trial", replay_trial, "Trial index")->required();
  add_common(replay, replay_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) {
      json params;
      try {
        params = json::parse(params_text);
      } catch (const json::parse_error& e) {
        throw cpe::ParseError("--params", e.what());
      }
      const cpe::Instance inst = cpe::generate_instance(kind, params, gen_seed);
      write_text(gen_out, cpe::json_io::instance_to_json(inst).dump(2) + "\n");
    } else if (*predict) {
      const cpe::Instance inst =
          cpe::json_io::instance_from_json(cpe::config_io::read_json_file(predict_in));
      write_text(predict_out, cpe::predict_report(inst, eps, delta).dump(2) + "\n");
    } else if (*run) {
      const cpe::ExperimentConfig cfg = load_config(run_cfg, run_o);
      const cpe::PreparedInstance prep = cpe::prepare(cfg);
      const cpe::ExperimentResult res = cpe::run_experiment(cfg, prep, run_o.jobs);
      write_text(cfg.csv_path, res.csv());
      if (!cfg.jsonl_path.empty()) write_text(cfg.jsonl_path, res.jsonl(prep.instance));
    } else if (*tune) {
      const cpe::ExperimentConfig cfg = load_config(tune_cfg, tune_o);
      auto fill = [](std::vector<double>& g) {
        if (!g.empty()) return;
        for (int i = 1; i <= 20; ++i) g.push_back(0.05 * i);
      };
      fill(grid_o);
      fill(grid_i);
      const cpe::PreparedInstance prep = cpe::prepare(cfg);
      const cpe::GridResult g =
          cpe::grid_search(cfg, prep, tune_algo, grid_o, grid_i, pilot, tune_o.jobs);
      write_text(tune_o.out.empty() ? "" : tune_o.out + ".csv", cpe::grid_csv(g));
      std::cerr << "best: " << cpe::config_io::algo_to_json(g.best).dump() << "\n";
    } else if (*replay) {
      const cpe::ExperimentConfig cfg = load_config(replay_cfg, replay_o);
      const cpe::PreparedInstance prep = cpe::prepare(cfg);
      std::string out;
      for (const auto& r : cpe::replay_trial(cfg, prep, replay_trial)) {
        out += cpe::trial_to_json(r, prep.instance).dump() + "\n";
      }
      write_text(replay_o.out.empty() ? "" : replay_o.out + ".jsonl", out);
    }
  } catch (const cpe::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const cpe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const cpe::ParamError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const cpe::SequenceError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const cpe::BudgetError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}
