#include "actx/executor.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "actx/remote_executor.hpp"
#include "actx/rng.hpp"

namespace actx {

namespace {

EnvAction scripted_act(const ScriptedOracle& oracle, const ExecutorContext& ctx, const MemoryState& memory,
                       const Observation& obs) {
  const TaskSpec& task = *ctx.task;

  std::set<Payload> visible;
  for (const auto& u : memory.units) visible.insert(u.payload);
  for (const auto& u : obs.units) visible.insert(u.payload);

  // (a) answer when everything required is in view at the consume step.
  if (obs.step == task.consume_step) {
    const auto required = task.answer_set();
    if (std::includes(visible.begin(), visible.end(), required.begin(), required.end())) {
      return Answer{required};
    }
  }

  // (b) attention dilution from retained trap units.
  if (memory.count(UnitKind::kTrapNoise) >= oracle.trap_threshold) {
    const double u = hashed_uniform(oracle.seed, {tag(SeedDomain::kExecutor), ctx.stream,
                                                  static_cast<std::uint64_t>(obs.step)});
    if (u < oracle.trap_prob) {
      Answer wrong;
      for (const auto& unit : memory.units) {
        if (unit.kind == UnitKind::kTrapNoise) wrong.payloads.insert(unit.payload);
      }
      return wrong;
    }
  }

  // (c) progress toward the next anchor that is not yet due.
  Payload target = 0;
  for (const auto& a : task.required_anchors) {
    if (a.reveal_step > obs.step) {
      target = a.payload;
      break;
    }
  }
  return progress_action(ctx.skin, target);
}

}  // namespace

void validate_executor(const ExecutorPolicy& exec) {
  if (const auto* o = std::get_if<ScriptedOracle>(&exec)) {
    if (!(o->trap_prob >= 0.0 && o->trap_prob <= 1.0))
      throw std::invalid_argument("executor.trap_prob must be in [0, 1]");
    if (o->trap_threshold < 0) throw std::invalid_argument("executor.trap_threshold must be >= 0");
  } else if (!std::get<RemoteExecutor>(exec).client) {
    throw std::invalid_argument("remote executor requires a client");
  }
}

EnvAction act(const ExecutorPolicy& exec, const ExecutorContext& ctx, const MemoryState& memory,
              const Observation& obs) {
  if (!ctx.task) throw std::invalid_argument("executor context has no task");
  if (const auto* oracle = std::get_if<ScriptedOracle>(&exec)) return scripted_act(*oracle, ctx, memory, obs);
  const auto& remote = std::get<RemoteExecutor>(exec);
  return remote.client->request(
      RemoteRequest{render_instruction(*ctx.task), render_units(memory.units), render_units(obs.units)});
}

AugmentedStep augmented_step(const AugmentedEnv& aug, const EnvState& state, const MemoryState& memory,
                             const Observation& obs) {
  EnvAction action = act(aug.executor, aug.context(), memory, obs);
  StepResult r = aug.env.step(state, action);
  return AugmentedStep{std::move(r.state), std::move(r.observation), r.done, r.reward, std::move(action)};
}

std::string render_instruction(const TaskSpec& task) {
  std::ostringstream os;
  os << "Collect every item of family " << task.instruction_unit.payload << " (" << task.required_anchors.size()
     << " required) and answer with the full set at step " << task.consume_step << ".";
  return os.str();
}

std::string render_units(const std::vector<InfoUnit>& units) {
  std::ostringstream os;
  for (const auto& u : units) {
    os << '[' << u.id << "] " << to_string(u.kind) << ' ' << u.payload << " (" << u.token_cost << " tok, t="
       << u.revealed_at << ")\n";
  }
  return os.str();
}

}  // namespace actx
