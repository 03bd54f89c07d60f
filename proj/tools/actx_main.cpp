// actx: train, evaluate and inspect context curators.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "actx/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Context-curator training and evaluation"};
  app.require_subcommand(1);

  std::string config;
  std::string params;
  std::string log;
  std::string dest;
  double tolerance = 1e-4;
  int count = 100;

  auto* train = app.add_subcommand("train", "Train the curator with multi-turn GRPO");
  train->add_option("config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval", "Evaluate a params file on held-out episodes");
  eval->add_option("params", params, "Params file written by train")->required()->check(CLI::ExistingFile);
  eval->add_option("config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);

  auto* compare = app.add_subcommand("compare-strategies", "No memory vs full context vs curated memory");
  compare->add_option("config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);

  auto* grad = app.add_subcommand("gradcheck", "Check analytic gradients against finite differences");
  grad->add_option("config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  grad->add_option("--tolerance", tolerance, "Max componentwise relative error")->capture_default_str();

  auto* replay = app.add_subcommand("replay", "Render a trajectory log turn by turn");
  replay->add_option("log", log, "Trajectory log (JSONL)")->required()->check(CLI::ExistingFile);

  auto* tasks = app.add_subcommand("tasks", "Write a task corpus for reuse across runs");
  tasks->add_option("config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  tasks->add_option("output", dest, "Destination JSONL file")->required();
  tasks->add_option("-n,--count", count, "Number of tasks")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  if (*train) return actx::cmd_train(config, std::cout, std::cerr);
  if (*eval) return actx::cmd_eval(params, config, std::cout, std::cerr);
  if (*compare) return actx::cmd_compare(config, std::cout, std::cerr);
  if (*grad) return actx::cmd_gradcheck(config, tolerance, std::cout, std::cerr);
  if (*replay) return actx::cmd_replay(log, std::cout, std::cerr);
  if (*tasks) return actx::cmd_tasks(config, count, dest, std::cout, std::cerr);
  return 1;
}
