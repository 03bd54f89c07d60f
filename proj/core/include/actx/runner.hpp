#pragma once

// Experiment orchestration behind the CLI subcommands. Every command takes
// a resolved RunConfig and is deterministic in it: task seeds, trajectory
// seeds and executor streams are all derived from the master seed.

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "actx/config.hpp"
#include "actx/grpo.hpp"
#include "actx/trajectory.hpp"

namespace actx {

// Training task b of iteration `it`, generated from the master seed.
TaskSource training_tasks(const RunConfig& cfg);
// Held-out evaluation tasks: the corpus (cycled) when configured, otherwise
// generated from a seed domain disjoint from training.
std::vector<TaskSpec> evaluation_tasks(const RunConfig& cfg, int episodes);

TrainEnv make_train_env(const RunConfig& cfg);

struct EvalMetrics {
  Strategy strategy = Strategy::kActive;
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_total_tokens = 0.0;  // under the strategy's own formula
  double mean_turns = 0.0;
};

struct EvalRun {
  EvalMetrics metrics;
  std::vector<Trajectory> trajectories;
  std::vector<ContextReport> reports;
};

// Throws std::invalid_argument when episodes < 1.
EvalRun evaluate(const RunConfig& cfg, const PolicyParams& params, Strategy strategy, int episodes);

// Policy params for eval/compare: params_path if set, otherwise zeros.
PolicyParams initial_params(const RunConfig& cfg);

std::string training_csv(const std::vector<TrainingRow>& curve);
// Rows {task_id, strategy, turn, C_t, total}; total repeats on every row.
std::string context_csv(const std::vector<Trajectory>& trajs, const std::vector<ContextReport>& reports);

struct GradcheckOptions {
  std::uint64_t seed = 0;
  FeatureBasis basis = FeatureBasis::kCompact;
  int batches = 4;
  double h = 1e-5;
  double tolerance = 1e-4;
  std::vector<double> h_sweep{1e-4, 1e-5, 1e-6};
};

struct GradcheckSweepPoint {
  double h = 0.0;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
};

struct GradcheckReport {
  double max_rel_error = 0.0;
  std::size_t components_checked = 0;
  int excluded_batches = 0;  // resampled because a ratio sat on a clip edge
  std::vector<GradcheckSweepPoint> sweep;
  bool passed = false;
};

// Central differences of grpo_objective against grpo_gradient on
// randomized toy batches. Relative error is |g - fd| / max(|g|, |fd|, 1e-6).
GradcheckReport gradcheck(const GradcheckOptions& options);

// Subcommands. Return a process exit code; human output goes to `out`,
// diagnostics to `err`.
int cmd_train(const std::filesystem::path& config, std::ostream& out, std::ostream& err);
int cmd_eval(const std::filesystem::path& params, const std::filesystem::path& config, std::ostream& out,
             std::ostream& err);
int cmd_compare(const std::filesystem::path& config, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const std::filesystem::path& config, double tolerance, std::ostream& out, std::ostream& err);
int cmd_replay(const std::filesystem::path& log, std::ostream& out, std::ostream& err);
int cmd_tasks(const std::filesystem::path& config, int count, const std::filesystem::path& dest, std::ostream& out,
              std::ostream& err);

}  // namespace actx
