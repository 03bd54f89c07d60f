#include "actx/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>

#include "actx/rng.hpp"

namespace actx {

namespace {

constexpr int kMaxRolloutAttempts = 4;

// Log-prob, KL and (optionally) their gradients for one curation step.
struct StepTerms {
  double logp = 0.0;
  double kl = 0.0;
  std::vector<double> dlogp;
  std::vector<double> dkl;
};

StepTerms evaluate_step(const PolicyParams& params, const PolicyParams* ref, const CurationInput& input,
                        const CurationDecision& decision, bool with_grad) {
  if (decision.keep.size() != decision_count(input)) {
    throw std::invalid_argument("decision length does not match candidate count");
  }
  const auto rows = decision_features(params.basis, input, decision.keep);
  StepTerms out;
  const std::size_t dim = params.weights.size();
  if (with_grad) {
    out.dlogp.assign(dim, 0.0);
    out.dkl.assign(dim, 0.0);
  }
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto& f = rows[j];
    const double x = dot(params.weights, f);
    const bool keep = decision.keep[j];
    out.logp += log_sigmoid(keep ? x : -x);
    const double p = sigmoid(x);
    double kl_coeff = 0.0;
    if (ref) {
      const double y = dot(ref->weights, f);
      out.kl += bernoulli_kl_logits(x, y);
      kl_coeff = p * (1.0 - p) * (x - y);
    }
    if (with_grad) {
      const double score = (keep ? 1.0 : 0.0) - p;
      for (std::size_t k = 0; k < dim; ++k) {
        out.dlogp[k] += score * f[k];
        out.dkl[k] += kl_coeff * f[k];
      }
    }
  }
  return out;
}

void check_batch(const GroupBatch& batch, const PolicyParams& params, const PolicyParams& ref) {
  if (batch.trajectories.empty()) throw std::invalid_argument("empty group batch");
  if (batch.advantages.size() != batch.trajectories.size())
    throw std::invalid_argument("group batch advantages are not filled");
  if (params.basis != ref.basis || params.weights.size() != ref.weights.size())
    throw std::invalid_argument("policy and reference use different feature bases");
}

// Objective and gradient of a batch; grad may be null.
double objective_impl(const GroupBatch& batch, const PolicyParams& params, const PolicyParams& ref,
                      const GrpoConfig& cfg, std::vector<double>* grad) {
  check_batch(batch, params, ref);
  const std::size_t dim = params.weights.size();
  if (grad) grad->assign(dim, 0.0);
  double total = 0.0;
  std::vector<double> traj_grad(dim);
  for (std::size_t i = 0; i < batch.trajectories.size(); ++i) {
    const auto& traj = batch.trajectories[i];
    if (traj.steps.empty()) throw std::invalid_argument("trajectory with no steps in batch");
    const double a = batch.advantages[i];
    double sum = 0.0;
    std::fill(traj_grad.begin(), traj_grad.end(), 0.0);
    for (const auto& step : traj.steps) {
      const StepTerms terms = evaluate_step(params, &ref, step.input, step.decision, grad != nullptr);
      const double raw = terms.logp - step.logprob;
      const double log_ratio = std::clamp(raw, -kMaxLogRatio, kMaxLogRatio);
      const double rho = std::exp(log_ratio);
      const double unclipped = rho * a;
      const double clipped = std::clamp(rho, 1.0 - cfg.clip_ratio, 1.0 + cfg.clip_ratio) * a;
      sum += std::min(unclipped, clipped) - cfg.kl_beta * terms.kl;
      if (grad) {
        // At equality the unclipped branch is taken.
        const bool ratio_live = raw == log_ratio;
        const double surrogate_coeff = (unclipped <= clipped && ratio_live) ? a * rho : 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
          traj_grad[k] += surrogate_coeff * terms.dlogp[k] - cfg.kl_beta * terms.dkl[k];
        }
      }
    }
    const double inv_len = 1.0 / static_cast<double>(traj.steps.size());
    total += sum * inv_len;
    if (grad) {
      for (std::size_t k = 0; k < dim; ++k) (*grad)[k] += traj_grad[k] * inv_len;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(batch.trajectories.size());
  if (grad) {
    for (auto& g : *grad) g *= inv_n;
  }
  return total * inv_n;
}

Trajectory rollout_slot(const AugmentedEnv& aug, const PolicyParams& params, std::size_t capacity,
                        std::uint64_t group_seed, std::size_t index) {
  std::optional<ExecutorTransportError> last;
  for (int attempt = 0; attempt < kMaxRolloutAttempts; ++attempt) {
    const std::uint64_t seed = derive_seed(group_seed, {index, static_cast<std::uint64_t>(attempt)});
    AugmentedEnv local = aug;
    local.stream = derive_seed(seed, {tag(SeedDomain::kExecutor)});
    try {
      return rollout(local, params, RolloutOptions{Strategy::kActive, capacity}, seed);
    } catch (const ExecutorTransportError& e) {
      last = e;
    }
  }
  throw *last;
}

}  // namespace

void validate(const GrpoConfig& cfg) {
  if (cfg.group_size < 2) throw std::invalid_argument("grpo.group_size must be >= 2");
  if (!(cfg.adv_epsilon > 0.0)) throw std::invalid_argument("grpo.adv_epsilon must be > 0");
  if (!(cfg.clip_ratio > 0.0 && cfg.clip_ratio < 1.0)) throw std::invalid_argument("grpo.clip_ratio must be in (0, 1)");
  if (!(cfg.kl_beta >= 0.0)) throw std::invalid_argument("grpo.kl_beta must be >= 0");
  if (!std::isfinite(cfg.learning_rate) || cfg.learning_rate < 0.0)
    throw std::invalid_argument("grpo.learning_rate must be finite and >= 0");
  if (cfg.iterations < 0) throw std::invalid_argument("grpo.iterations must be >= 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("grpo.batch_size must be >= 1");
  if (cfg.workers < 1) throw std::invalid_argument("workers must be >= 1");
}

GroupBatch rollout_group(const AugmentedEnv& aug, const PolicyParams& params, std::size_t capacity, int group_size,
                         std::uint64_t seed, int workers) {
  if (group_size < 2) throw std::invalid_argument("group_size must be >= 2");
  GroupBatch batch;
  batch.trajectories.resize(static_cast<std::size_t>(group_size));
  parallel_for(batch.trajectories.size(), workers,
               [&](std::size_t i) { batch.trajectories[i] = rollout_slot(aug, params, capacity, seed, i); });
  return batch;
}

std::vector<double> advantages(std::span<const double> rewards, double adv_epsilon) {
  if (rewards.size() < 2) throw std::invalid_argument("advantages need a group of at least 2");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double denom = std::sqrt(var / n) + adv_epsilon;
  std::vector<double> out;
  out.reserve(rewards.size());
  for (double r : rewards) out.push_back((r - mean) / denom);
  return out;
}

void fill_advantages(GroupBatch& batch, double adv_epsilon) {
  std::vector<double> rewards;
  for (const auto& t : batch.trajectories) rewards.push_back(static_cast<double>(t.reward));
  batch.advantages = advantages(rewards, adv_epsilon);
}

double importance_ratio(const PolicyParams& params, double old_logprob, const CurationInput& input,
                        const CurationDecision& decision) {
  return std::exp(std::clamp(logprob(params, input, decision) - old_logprob, -kMaxLogRatio, kMaxLogRatio));
}

double clipped_surrogate(double rho, double advantage, double clip_ratio) {
  return std::min(rho * advantage, std::clamp(rho, 1.0 - clip_ratio, 1.0 + clip_ratio) * advantage);
}

double bernoulli_kl_logits(double x, double y) {
  if (x == y) return 0.0;
  const double p = sigmoid(x);
  const double kl = p * (log_sigmoid(x) - log_sigmoid(y)) + (1.0 - p) * (log_sigmoid(-x) - log_sigmoid(-y));
  return std::max(0.0, kl);
}

double kl_step(const PolicyParams& params, const PolicyParams& ref_params, const CurationInput& input,
               const CurationDecision& decision) {
  if (params.basis != ref_params.basis) throw std::invalid_argument("kl_step needs a shared feature basis");
  return evaluate_step(params, &ref_params, input, decision, false).kl;
}

double grpo_objective(const GroupBatch& batch, const PolicyParams& params, const PolicyParams& ref_params,
                      const GrpoConfig& cfg) {
  return objective_impl(batch, params, ref_params, cfg, nullptr);
}

std::vector<double> grpo_gradient(const GroupBatch& batch, const PolicyParams& params,
                                  const PolicyParams& ref_params, const GrpoConfig& cfg) {
  std::vector<double> g;
  objective_impl(batch, params, ref_params, cfg, &g);
  return g;
}

double mean_kl(const GroupBatch& batch, const PolicyParams& params, const PolicyParams& ref_params) {
  if (batch.trajectories.empty()) return 0.0;
  double total = 0.0;
  for (const auto& traj : batch.trajectories) {
    double s = 0.0;
    for (const auto& step : traj.steps) s += kl_step(params, ref_params, step.input, step.decision);
    total += s / static_cast<double>(traj.steps.size());
  }
  return total / static_cast<double>(batch.trajectories.size());
}

TrainResult train(const GrpoConfig& cfg, const TaskSource& tasks, const PolicyParams& params0, const TrainEnv& env,
                  const BatchObserver& observer) {
  validate(cfg);
  validate_executor(env.executor);
  if (params0.weights.size() != feature_dim(params0.basis))
    throw std::invalid_argument("params0 dimension does not match its feature basis");

  TrainResult result{params0, {}};
  const PolicyParams& ref = params0;
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  const auto group = static_cast<std::size_t>(cfg.group_size);

  for (int it = 0; it < cfg.iterations; ++it) {
    const PolicyParams old = result.params;
    const auto iteration = static_cast<std::uint64_t>(it);

    std::vector<AugmentedEnv> envs;
    std::vector<std::uint64_t> group_seeds;
    envs.reserve(batch_size);
    for (std::size_t b = 0; b < batch_size; ++b) {
      envs.push_back(AugmentedEnv{Environment(tasks(iteration, b), env.skin), env.executor, 0});
      group_seeds.push_back(derive_seed(cfg.seed, {tag(SeedDomain::kTrajectory), iteration, b}));
    }

    std::vector<GroupBatch> groups(batch_size);
    for (auto& g : groups) g.trajectories.resize(group);
    parallel_for(batch_size * group, cfg.workers, [&](std::size_t k) {
      const std::size_t b = k / group;
      const std::size_t i = k % group;
      groups[b].trajectories[i] = rollout_slot(envs[b], old, env.capacity, group_seeds[b], i);
    });

    TrainingRow row;
    row.iteration = it;
    std::vector<double> grad(old.weights.size(), 0.0);
    double n_traj = 0.0;
    for (auto& g : groups) {
      fill_advantages(g, cfg.adv_epsilon);
      std::vector<double> gg;
      row.objective += objective_impl(g, old, ref, cfg, &gg);
      for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += gg[k];
      row.mean_kl += mean_kl(g, old, ref);
      for (const auto& t : g.trajectories) {
        row.mean_reward += t.reward;
        row.tokens_active += static_cast<double>(trajectory_report(t, Strategy::kActive, env.skin, env.lengths).total);
        row.tokens_full_hypothetical +=
            static_cast<double>(trajectory_report(t, Strategy::kFullContext, env.skin, env.lengths).total);
        n_traj += 1.0;
      }
    }
    const double n_groups = static_cast<double>(groups.size());
    row.objective /= n_groups;
    row.mean_kl /= n_groups;
    row.mean_reward /= n_traj;
    row.tokens_active /= n_traj;
    row.tokens_full_hypothetical /= n_traj;
    double norm2 = 0.0;
    for (auto& g : grad) {
      g /= n_groups;
      norm2 += g * g;
    }
    row.grad_norm = std::sqrt(norm2);

    if (observer) observer(it, groups);

    for (std::size_t k = 0; k < grad.size(); ++k) result.params.weights[k] += cfg.learning_rate * grad[k];
    result.curve.push_back(row);
  }
  return result;
}

}  // namespace actx
