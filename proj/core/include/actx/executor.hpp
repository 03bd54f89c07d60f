#pragma once

// The frozen task executor and the wrapper that folds it into the
// environment, so the curator faces a single-agent problem whose transition
// depends only on the memory it produced.

#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>

#include "actx/curation.hpp"
#include "actx/env.hpp"

namespace actx {

class RemoteClient;

// Answers from memory + observation when every required anchor is visible
// at the consume step. Otherwise, if at least trap_threshold trap units sit
// in memory, it is derailed with probability trap_prob into answering with
// the trap payloads. Otherwise it takes the skin's progress action toward
// the next unrevealed anchor.
struct ScriptedOracle {
  int trap_threshold = 3;
  double trap_prob = 0.8;
  std::uint64_t seed = 0;

  static constexpr int kNeverTrap = std::numeric_limits<int>::max();
};

struct RemoteExecutor {
  std::shared_ptr<RemoteClient> client;
};

using ExecutorPolicy = std::variant<ScriptedOracle, RemoteExecutor>;

// Throws std::invalid_argument for p_trap outside [0, 1], D < 0 or a null
// remote client.
void validate_executor(const ExecutorPolicy& exec);

class ExecutorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A remote call that failed after all retries. Trajectories that hit this
// are aborted and resampled rather than scored.
class ExecutorTransportError : public ExecutorError {
 public:
  using ExecutorError::ExecutorError;
};

// What the executor may read besides memory and observation. `stream` keys
// the executor's private random draws for one trajectory.
struct ExecutorContext {
  const TaskSpec* task = nullptr;
  Skin skin = Skin::kWeb;
  std::uint64_t stream = 0;
};

EnvAction act(const ExecutorPolicy& exec, const ExecutorContext& ctx, const MemoryState& memory,
              const Observation& obs);

struct AugmentedEnv {
  Environment env;
  ExecutorPolicy executor;
  std::uint64_t stream = 0;

  ExecutorContext context() const { return ExecutorContext{&env.task(), env.skin(), stream}; }
};

struct AugmentedStep {
  EnvState state;
  Observation observation;
  bool done = false;
  int reward = 0;
  EnvAction action_taken;
};

// act(m_t, o_t) followed by env.step. `obs` is the observation o_t the
// memory was curated from.
AugmentedStep augmented_step(const AugmentedEnv& aug, const EnvState& state, const MemoryState& memory,
                             const Observation& obs);

// Plain-text renderings used by the remote wire format and log replay.
std::string render_instruction(const TaskSpec& task);
std::string render_units(const std::vector<InfoUnit>& units);

}  // namespace actx
