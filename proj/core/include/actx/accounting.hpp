#pragma once

// Per-turn context lengths for the three context-assembly strategies.
// Turns are 1-indexed: turn t covers environment step t - 1.
//
//   no memory      C_t = S + O_t + U
//   full, web      C_t = S + O_t + (t-1) P + U + sum_{k<t} (Re_k + A_k)
//   full, search   C_t = S + sum_{k<=t} R_k + U + sum_{k<t} (Re_k + A_k)
//   active, web    C_t = S + O_t + U + M_t
//   active, search C_t = S + R_t + U + M_t
//
// The search full-context sum includes the current retrieval while the web
// placeholder sum stops at t - 1; both are kept as stated.

#include <cstdint>
#include <vector>

#include "actx/env.hpp"
#include "actx/trajectory.hpp"

namespace actx {

using Tokens = std::int64_t;

struct AssistantTurn {
  Tokens reasoning = 0;
  Tokens action = 0;
};

struct LengthParts {
  Tokens system_len = 0;       // S
  Tokens obs_len = 0;          // O_t (web) or R_t (search) of the current turn
  Tokens placeholder_len = 0;  // P
  Tokens objective_len = 0;    // U
  std::vector<AssistantTurn> assistant;  // (Re_k, A_k) for k < t
  std::vector<Tokens> retrieval;         // R_1..R_t, search full context only
  Tokens memory_len = 0;       // M_t
};

Tokens ctx_no_memory(const LengthParts& p);
// Throws std::invalid_argument unless t >= 1 and assistant.size() == t - 1.
Tokens ctx_full_web(const LengthParts& p, int t);
// Additionally requires retrieval.size() == t.
Tokens ctx_full_search(const LengthParts& p, int t);
Tokens ctx_active_web(const LengthParts& p);
Tokens ctx_active_search(const LengthParts& p);

// Fixed costs of the parts the simulator does not produce as InfoUnits.
struct LengthConfig {
  Tokens system_len = 64;
  Tokens placeholder_len = 10;
  Tokens reasoning_len = 48;
  Tokens action_len = 16;
};

struct ContextReport {
  Strategy strategy = Strategy::kActive;
  Skin skin = Skin::kWeb;
  std::vector<Tokens> per_turn;  // C_1..C_L
  Tokens total = 0;
};

// Per-turn lengths of a logged trajectory under `strategy`. O_t / R_t are
// the observation's unit costs without the instruction (which is U); M_t is
// the curated memory carried into the turn, also without the instruction.
// Throws std::invalid_argument for an empty trajectory or one whose first
// step lacks the instruction unit.
ContextReport trajectory_report(const Trajectory& traj, Strategy strategy, Skin skin, const LengthConfig& cfg);

}  // namespace actx
