#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rapid/errors.hpp"
#include "rapid/harness.hpp"

namespace {

void print_summary(const rapid::RunSummary& s) {
  std::cout << s.run << ": mean_max " << s.mean_max << " std_max " << s.std_max << " (" << s.seeds.size()
            << " seeds) -> " << (s.directory / "summary.json").string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Episode-ranking exploration trainer"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Train every seed of an experiment config");
  run->add_option("config", config_path, "YAML experiment config")->required();

  std::string checkpoint;
  std::string env_name;
  int episodes = 100;
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "Greedy evaluation of a checkpoint on fresh layouts");
  eval->add_option("checkpoint", checkpoint, "checkpoint written by run")->required();
  eval->add_option("env", env_name, "environment name, e.g. MultiRoom-N2-S4")->required();
  eval->add_option("--episodes", episodes, "number of episodes")->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_seed, "layout stream seed");

  std::string param;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "Run one experiment per value of a hyperparameter");
  sweep->add_option("config", config_path, "YAML experiment config")->required();
  sweep->add_option("--param", param, "S, D, w1 or w2")->required()->check(CLI::IsMember({"S", "D", "w1", "w2"}));
  sweep->add_option("--values", values, "comma-separated values")->required()->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      print_summary(rapid::run_experiment(rapid::load_config(config_path)));
    } else if (*eval) {
      const rapid::EnvSpec spec = rapid::parse_env_name(env_name);
      const rapid::EvalResult r = rapid::evaluate_checkpoint(checkpoint, spec, episodes, eval_seed);
      nlohmann::ordered_json j;
      j["env"] = spec.name();
      j["episodes"] = r.episodes;
      j["mean_return"] = r.mean_return;
      j["success_rate"] = r.success_rate;
      j["mean_length"] = r.mean_length;
      j["mean_distinct_obs"] = r.mean_distinct_obs;
      j["mean_local_score"] = r.mean_local_score;
      std::cout << j.dump(2) << '\n';
    } else if (*sweep) {
      const rapid::ExperimentConfig cfg = rapid::load_config(config_path);
      for (const auto& s : rapid::run_sweep(cfg, param, values)) print_summary(s);
    }
  } catch (const rapid::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
