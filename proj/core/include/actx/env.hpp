#pragma once

// Synthetic partially observable environments. Each step emits a list of
// InfoUnits in which a few task-critical anchors are buried among noise
// units; the only reward is a binary terminal outcome.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace actx {

using UnitId = std::uint64_t;
using Payload = std::int64_t;

enum class UnitKind : std::uint8_t { kAnchor = 0, kNoise = 1, kTrapNoise = 2, kInstruction = 3 };

std::string_view to_string(UnitKind kind);
UnitKind unit_kind_from_string(std::string_view name);

// Payload symbols are grouped into families of kFamilyStride consecutive
// values. The instruction's payload is its family id; anchors live in that
// family, noise in other families.
inline constexpr Payload kFamilyStride = 1000;
inline constexpr Payload payload_family(Payload p) { return p / kFamilyStride; }

struct InfoUnit {
  UnitId id = 0;
  UnitKind kind = UnitKind::kNoise;
  Payload payload = 0;
  int token_cost = 1;
  int revealed_at = 0;

  friend bool operator==(const InfoUnit&, const InfoUnit&) = default;
};

struct AnchorSchedule {
  Payload payload = 0;
  int reveal_step = 0;
  int token_cost = 1;

  friend bool operator==(const AnchorSchedule&, const AnchorSchedule&) = default;
};

struct TaskSpec {
  std::uint64_t task_id = 0;
  InfoUnit instruction_unit;
  std::vector<AnchorSchedule> required_anchors;  // sorted by reveal_step
  int consume_step = 0;
  int horizon_cap = 15;
  int noise_per_step = 20;
  int trap_noise_per_step = 1;
  std::uint64_t seed = 0;

  std::set<Payload> answer_set() const;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct Difficulty {
  int anchors = 1;
  int horizon = 5;
  int noise_per_step = 20;
  int trap_noise_per_step = 1;
  int horizon_cap = 15;
};

// Token costs of generated units.
inline constexpr int kInstructionTokens = 10;
inline constexpr int kAnchorTokensMin = 4;
inline constexpr int kAnchorTokensMax = 12;
inline constexpr int kNoiseTokensMin = 5;
inline constexpr int kNoiseTokensMax = 40;

class TaskError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Deterministic in (seed, difficulty). consume_step = horizon - 1 and anchor
// reveal steps are distinct draws from [0, consume_step).
TaskSpec generate_task(std::uint64_t seed, const Difficulty& difficulty);

// Throws TaskError naming the violated invariant.
void validate_task(const TaskSpec& task);

struct Observation {
  int step = 0;
  std::vector<InfoUnit> units;
  int total_tokens = 0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct Navigate {
  Payload target = 0;
  friend bool operator==(const Navigate&, const Navigate&) = default;
};
struct Query {
  Payload key = 0;
  friend bool operator==(const Query&, const Query&) = default;
};
struct Answer {
  std::set<Payload> payloads;
  friend bool operator==(const Answer&, const Answer&) = default;
};
struct Stop {
  friend bool operator==(const Stop&, const Stop&) = default;
};

using EnvAction = std::variant<Navigate, Query, Answer, Stop>;

// "navigate 17", "query 17", "answer 1003,1007", "stop".
std::string format_action(const EnvAction& action);
// Inverse of format_action; throws std::invalid_argument on malformed text.
EnvAction parse_action(std::string_view text);

enum class Skin : std::uint8_t { kWeb, kSearch };

std::string_view to_string(Skin skin);
Skin skin_from_string(std::string_view name);

// The non-Answer action that advances the reveal schedule for a skin.
EnvAction progress_action(Skin skin, Payload target);
bool is_progress_action(Skin skin, const EnvAction& action);

struct EnvState {
  int step = 0;
  std::vector<Payload> revealed;  // anchor payloads emitted so far, in order
  bool done = false;
  int reward = 0;
  std::optional<EnvAction> last_action;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct StepResult {
  EnvState state;
  Observation observation;
  bool done = false;
  int reward = 0;
};

// Stateless simulator bound to one task and skin. Anchors scheduled for
// step t > 0 appear only if the action at t - 1 was the skin's progress
// action aimed at that anchor (Navigate target / Query key == payload).
class Environment {
 public:
  Environment(TaskSpec task, Skin skin);

  const TaskSpec& task() const { return task_; }
  Skin skin() const { return skin_; }

  std::pair<EnvState, Observation> reset() const;

  // Throws std::logic_error when state.done.
  StepResult step(const EnvState& state, const EnvAction& action) const;

  // Observation for a step with the given anchors included.
  Observation observe(int step, const std::vector<AnchorSchedule>& anchors) const;

 private:
  TaskSpec task_;
  Skin skin_;
};

}  // namespace actx
