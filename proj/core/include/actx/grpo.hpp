#pragma once

// Multi-turn group-relative policy optimization for the curator.
//
// For one task, G trajectories are sampled and each reward is standardized
// against the group (population std). Every step of trajectory i reuses the
// trajectory-level advantage A_i. The objective per trajectory is
//   (1/L) sum_t [ min(rho_t A_i, clip(rho_t, 1-eps, 1+eps) A_i) - beta KL_t ]
// with rho_t = pi(m_t|c_t) / pi_old(m_t|c_t) and KL_t the exact Bernoulli KL
// to the reference policy summed over the step's decisions. Only curator
// decisions carry gradient; executor and environment have no parameters.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "actx/accounting.hpp"
#include "actx/curation.hpp"
#include "actx/executor.hpp"
#include "actx/trajectory.hpp"

namespace actx {

struct GrpoConfig {
  int group_size = 4;
  double adv_epsilon = 1e-8;
  double clip_ratio = 0.2;
  double kl_beta = 0.001;
  double learning_rate = 1e-6;
  int iterations = 100;
  int batch_size = 8;  // tasks per update, each contributing a full group
  std::uint64_t seed = 0;
  int workers = 1;
};

// Throws std::invalid_argument naming the offending field.
void validate(const GrpoConfig& cfg);

struct GroupBatch {
  std::vector<Trajectory> trajectories;
  std::vector<double> advantages;  // empty until filled
};

// Exponent bound on log(rho).
inline constexpr double kMaxLogRatio = 30.0;

// G curator rollouts on aug's task under the Active strategy. Trajectory i
// is seeded from derive_seed(seed, {i, attempt}); a trajectory aborted by an
// ExecutorTransportError is dropped and resampled with the next attempt.
GroupBatch rollout_group(const AugmentedEnv& aug, const PolicyParams& params, std::size_t capacity, int group_size,
                         std::uint64_t seed, int workers = 1);

std::vector<double> advantages(std::span<const double> rewards, double adv_epsilon);
void fill_advantages(GroupBatch& batch, double adv_epsilon);

double importance_ratio(const PolicyParams& params, double old_logprob, const CurationInput& input,
                        const CurationDecision& decision);

double clipped_surrogate(double rho, double advantage, double clip_ratio);

// KL(Bernoulli(sigmoid(x)) || Bernoulli(sigmoid(y))).
double bernoulli_kl_logits(double x, double y);

double kl_step(const PolicyParams& params, const PolicyParams& ref_params, const CurationInput& input,
               const CurationDecision& decision);

// Throw std::invalid_argument for an empty batch or unfilled advantages.
double grpo_objective(const GroupBatch& batch, const PolicyParams& params, const PolicyParams& ref_params,
                      const GrpoConfig& cfg);
std::vector<double> grpo_gradient(const GroupBatch& batch, const PolicyParams& params,
                                  const PolicyParams& ref_params, const GrpoConfig& cfg);

// Mean over trajectories of (1/L) sum_t KL_t.
double mean_kl(const GroupBatch& batch, const PolicyParams& params, const PolicyParams& ref_params);

struct TrainingRow {
  int iteration = 0;
  double mean_reward = 0.0;
  double objective = 0.0;
  double mean_kl = 0.0;
  double grad_norm = 0.0;
  double tokens_active = 0.0;             // mean total per trajectory
  double tokens_full_hypothetical = 0.0;  // same trajectories, full context
};

struct TrainEnv {
  Skin skin = Skin::kWeb;
  ExecutorPolicy executor = ScriptedOracle{};
  std::size_t capacity = 8;
  LengthConfig lengths;
};

using TaskSource = std::function<TaskSpec(std::uint64_t iteration, std::uint64_t index)>;
using BatchObserver = std::function<void(int iteration, const std::vector<GroupBatch>& groups)>;

struct TrainResult {
  PolicyParams params;
  std::vector<TrainingRow> curve;
};

// One on-policy gradient ascent step per iteration; pi_old is the current
// params at the start of the iteration and pi_ref is params0 throughout.
TrainResult train(const GrpoConfig& cfg, const TaskSource& tasks, const PolicyParams& params0, const TrainEnv& env,
                  const BatchObserver& observer = {});

}  // namespace actx
