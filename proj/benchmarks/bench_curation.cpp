#include <benchmark/benchmark.h>

#include "actx/curation.hpp"
#include "actx/env.hpp"

namespace {

actx::CurationInput make_input(int noise, std::size_t capacity) {
  const auto task = actx::generate_task(7, actx::Difficulty{1, 5, noise, 1, 15});
  const actx::Environment env(task, actx::Skin::kWeb);
  auto [state, obs] = env.reset();
  return actx::CurationInput{actx::MemoryState::empty(capacity), obs, std::nullopt};
}

void BM_Curate(benchmark::State& state) {
  const auto input = make_input(static_cast<int>(state.range(0)), 8);
  auto params = actx::PolicyParams::zeros(actx::FeatureBasis::kFull);
  actx::Rng rng(42);
  for (auto _ : state) {
    benchmark::DoNotOptimize(actx::curate(params, input, rng));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Logprob(benchmark::State& state) {
  const auto input = make_input(static_cast<int>(state.range(0)), 8);
  auto params = actx::PolicyParams::zeros(actx::FeatureBasis::kFull);
  actx::Rng rng(42);
  const auto decision = actx::curate(params, input, rng).decision;
  for (auto _ : state) {
    benchmark::DoNotOptimize(actx::logprob(params, input, decision));
  }
}

void BM_Observe(benchmark::State& state) {
  const auto task = actx::generate_task(7, actx::Difficulty{1, 5, static_cast<int>(state.range(0)), 1, 15});
  const actx::Environment env(task, actx::Skin::kSearch);
  int step = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(env.observe(step++ % 15, {}));
  }
}

}  // namespace

BENCHMARK(BM_Curate)->ArgNames({"noise"})->RangeMultiplier(4)->Range(4, 256);
BENCHMARK(BM_Logprob)->ArgNames({"noise"})->RangeMultiplier(4)->Range(4, 256);
BENCHMARK(BM_Observe)->ArgNames({"noise"})->RangeMultiplier(4)->Range(4, 256);
