#include <stdexcept>
#include <string>

#include "actx/trajectory.hpp"

namespace actx {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kNoMemory: return "no_memory";
    case Strategy::kFullContext: return "full_context";
    case Strategy::kActive: return "active";
  }
  return "?";
}

Strategy strategy_from_string(std::string_view name) {
  if (name == "no_memory") return Strategy::kNoMemory;
  if (name == "full_context") return Strategy::kFullContext;
  if (name == "active") return Strategy::kActive;
  throw std::invalid_argument("unknown strategy '" + std::string(name) +
                              "' (expected no_memory|full_context|active)");
}

Trajectory rollout(const AugmentedEnv& aug, const PolicyParams& params, const RolloutOptions& options,
                   std::uint64_t seed) {
  Trajectory traj;
  traj.task_id = aug.env.task().task_id;
  traj.seed = seed;
  Rng rng(derive_seed(seed, {tag(SeedDomain::kTrajectory)}));

  auto [state, obs] = aug.env.reset();
  const std::size_t capacity = options.strategy == Strategy::kFullContext ? kUnboundedCapacity : options.capacity;
  MemoryState memory = MemoryState::empty(capacity);
  std::optional<EnvAction> prev_action;

  // reset + at most horizon_cap steps; the guard only trips on a broken env.
  const int max_steps = aug.env.task().horizon_cap + 1;
  for (int t = 0; t < max_steps + 1; ++t) {
    TrajectoryStep step;
    step.input = CurationInput{std::move(memory), obs, prev_action};
    switch (options.strategy) {
      case Strategy::kActive: {
        auto cur = curate(params, step.input, rng);
        step.memory = std::move(cur.memory);
        step.decision = std::move(cur.decision);
        step.logprob = step.decision.total_logprob();
        break;
      }
      case Strategy::kNoMemory:
        step.memory = retain_instruction(step.input);
        break;
      case Strategy::kFullContext:
        step.memory = retain_all(step.input);
        break;
    }

    AugmentedStep next = augmented_step(aug, state, step.memory, obs);
    step.action = next.action_taken;
    memory = step.memory;
    prev_action = next.action_taken;
    traj.steps.push_back(std::move(step));
    state = std::move(next.state);
    obs = std::move(next.observation);
    if (next.done) {
      traj.reward = next.reward;
      return traj;
    }
  }
  throw std::logic_error("rollout exceeded the environment horizon");
}

}  // namespace actx
