#include "actx/accounting.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace actx {

namespace {

Tokens assistant_sum(const LengthParts& p) {
  Tokens s = 0;
  for (const auto& a : p.assistant) s += a.reasoning + a.action;
  return s;
}

void check_history(const LengthParts& p, int t) {
  if (t < 1) throw std::invalid_argument("turn index must be >= 1");
  if (p.assistant.size() != static_cast<std::size_t>(t - 1)) {
    throw std::invalid_argument("expected " + std::to_string(t - 1) + " prior assistant turns, got " +
                                std::to_string(p.assistant.size()));
  }
}

}  // namespace

Tokens ctx_no_memory(const LengthParts& p) { return p.system_len + p.obs_len + p.objective_len; }

Tokens ctx_full_web(const LengthParts& p, int t) {
  check_history(p, t);
  return p.system_len + p.obs_len + static_cast<Tokens>(t - 1) * p.placeholder_len + p.objective_len +
         assistant_sum(p);
}

Tokens ctx_full_search(const LengthParts& p, int t) {
  check_history(p, t);
  if (p.retrieval.size() != static_cast<std::size_t>(t)) {
    throw std::invalid_argument("expected " + std::to_string(t) + " retrieval entries, got " +
                                std::to_string(p.retrieval.size()));
  }
  return p.system_len + std::accumulate(p.retrieval.begin(), p.retrieval.end(), Tokens{0}) + p.objective_len +
         assistant_sum(p);
}

Tokens ctx_active_web(const LengthParts& p) {
  return p.system_len + p.obs_len + p.objective_len + p.memory_len;
}

Tokens ctx_active_search(const LengthParts& p) {
  return p.system_len + p.obs_len + p.objective_len + p.memory_len;
}

ContextReport trajectory_report(const Trajectory& traj, Strategy strategy, Skin skin, const LengthConfig& cfg) {
  if (traj.steps.empty()) throw std::invalid_argument("trajectory has no steps");
  Tokens objective = -1;
  for (const auto& u : traj.steps.front().input.observation.units) {
    if (u.kind == UnitKind::kInstruction) objective = u.token_cost;
  }
  for (const auto& u : traj.steps.front().input.memory.units) {
    if (u.kind == UnitKind::kInstruction) objective = u.token_cost;
  }
  if (objective < 0) throw std::invalid_argument("trajectory is missing the instruction unit");

  ContextReport report;
  report.strategy = strategy;
  report.skin = skin;
  LengthParts parts;
  parts.system_len = cfg.system_len;
  parts.placeholder_len = cfg.placeholder_len;
  parts.objective_len = objective;

  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const auto& step = traj.steps[i];
    const int t = static_cast<int>(i) + 1;
    Tokens obs = 0;
    for (const auto& u : step.input.observation.units) {
      if (u.kind != UnitKind::kInstruction) obs += u.token_cost;
    }
    parts.obs_len = obs;
    parts.retrieval.push_back(obs);
    parts.memory_len = step.input.memory.content_tokens();

    Tokens c = 0;
    switch (strategy) {
      case Strategy::kNoMemory: c = ctx_no_memory(parts); break;
      case Strategy::kFullContext: c = skin == Skin::kWeb ? ctx_full_web(parts, t) : ctx_full_search(parts, t); break;
      case Strategy::kActive: c = skin == Skin::kWeb ? ctx_active_web(parts) : ctx_active_search(parts); break;
    }
    report.per_turn.push_back(c);
    report.total += c;
    parts.assistant.push_back(AssistantTurn{cfg.reasoning_len, cfg.action_len});
  }
  return report;
}

}  // namespace actx
