#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "actx/curation.hpp"
#include "actx/executor.hpp"

namespace actx {

// How the executor's context is assembled each turn.
enum class Strategy : std::uint8_t {
  kNoMemory,     // instruction only; history discarded
  kFullContext,  // everything observed so far, unbounded
  kActive,       // curated by the policy, capacity-bounded
};

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view name);

struct TrajectoryStep {
  CurationInput input;         // c_t = (M_t, o_t, a_{t-1})
  CurationDecision decision;   // empty for the fixed strategies
  MemoryState memory;          // m_t
  EnvAction action;            // a_t
  double logprob = 0.0;        // log pi_old(m_t | c_t) at sampling time
};

struct Trajectory {
  std::uint64_t task_id = 0;
  std::uint64_t seed = 0;
  std::vector<TrajectoryStep> steps;
  int reward = 0;

  std::size_t length() const { return steps.size(); }
};

struct RolloutOptions {
  Strategy strategy = Strategy::kActive;
  std::size_t capacity = 8;
};

// Alternates curation and augmented_step from reset until done. The
// trajectory seed drives both the curator's sampling and the executor's
// private stream.
Trajectory rollout(const AugmentedEnv& aug, const PolicyParams& params, const RolloutOptions& options,
                   std::uint64_t seed);

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index is
// handled exactly once; callers write results into per-index slots.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn);

}  // namespace actx

#include "actx/detail/parallel_for.hpp"
