#include <benchmark/benchmark.h>

#include "actx/grpo.hpp"

namespace {

actx::GroupBatch make_batch(int group) {
  const auto task = actx::generate_task(11, actx::Difficulty{1, 5, 20, 1, 15});
  const actx::AugmentedEnv aug{actx::Environment(task, actx::Skin::kWeb), actx::ScriptedOracle{3, 0.8, 1}, 0};
  auto batch = actx::rollout_group(aug, actx::PolicyParams::zeros(actx::FeatureBasis::kFull), 8, group, 5);
  actx::fill_advantages(batch, 1e-8);
  return batch;
}

void BM_RolloutGroup(benchmark::State& state) {
  const auto task = actx::generate_task(11, actx::Difficulty{1, 5, 20, 1, 15});
  const actx::AugmentedEnv aug{actx::Environment(task, actx::Skin::kWeb), actx::ScriptedOracle{3, 0.8, 1}, 0};
  const auto params = actx::PolicyParams::zeros(actx::FeatureBasis::kFull);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(actx::rollout_group(aug, params, 8, static_cast<int>(state.range(0)), seed++));
  }
}

void BM_GrpoGradient(benchmark::State& state) {
  const auto batch = make_batch(static_cast<int>(state.range(0)));
  const auto params = actx::PolicyParams::zeros(actx::FeatureBasis::kFull);
  const actx::GrpoConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(actx::grpo_gradient(batch, params, params, cfg));
  }
}

void BM_GrpoObjective(benchmark::State& state) {
  const auto batch = make_batch(static_cast<int>(state.range(0)));
  const auto params = actx::PolicyParams::zeros(actx::FeatureBasis::kFull);
  const actx::GrpoConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(actx::grpo_objective(batch, params, params, cfg));
  }
}

}  // namespace

BENCHMARK(BM_RolloutGroup)->ArgNames({"G"})->Arg(4)->Arg(8)->Arg(16);
BENCHMARK(BM_GrpoGradient)->ArgNames({"G"})->Arg(4)->Arg(8)->Arg(16);
BENCHMARK(BM_GrpoObjective)->ArgNames({"G"})->Arg(4)->Arg(8)->Arg(16);
