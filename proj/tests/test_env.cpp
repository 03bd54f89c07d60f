#include <algorithm>
#include <set>

#include "doctest.h"

#include "actx/env.hpp"
#include "actx/rng.hpp"
#include "actx/task_io.hpp"

using namespace actx;

namespace {

// 1 anchor at step `reveal`, consume at 4, 20 noise + 1 trap per step.
TaskSpec manual_task(int reveal) {
  TaskSpec t;
  t.task_id = 99;
  t.seed = 99;
  t.instruction_unit = InfoUnit{1, UnitKind::kInstruction, 42, kInstructionTokens, 0};
  t.required_anchors = {AnchorSchedule{42 * kFamilyStride + 7, reveal, 6}};
  t.consume_step = 4;
  return t;
}

int count_kind(const Observation& o, UnitKind k) {
  return static_cast<int>(std::count_if(o.units.begin(), o.units.end(), [k](const InfoUnit& u) { return u.kind == k; }));
}

// Drives the oracle-style progress action so anchors keep being revealed.
EnvAction next_progress(const Environment& env, const EnvState& s) {
  for (const auto& a : env.task().required_anchors) {
    if (a.reveal_step > s.step) return progress_action(env.skin(), a.payload);
  }
  return progress_action(env.skin(), 0);
}

}  // namespace

TEST_CASE("generate_task places one anchor before the consume step") {
  const TaskSpec t = generate_task(7, Difficulty{1, 5, 20, 1, 15});
  CHECK(t.consume_step == 4);
  REQUIRE(t.required_anchors.size() == 1);
  CHECK(t.required_anchors[0].reveal_step >= 0);
  CHECK(t.required_anchors[0].reveal_step <= 3);
  CHECK(payload_family(t.required_anchors[0].payload) == t.instruction_unit.payload);
  CHECK(t.instruction_unit.kind == UnitKind::kInstruction);
  CHECK(t == generate_task(7, Difficulty{1, 5, 20, 1, 15}));
  CHECK_NOTHROW(validate_task(t));
}

TEST_CASE("generate_task rejects infeasible schedules") {
  CHECK_THROWS_AS(generate_task(7, Difficulty{3, 3, 20, 1, 15}), TaskError);
  CHECK_THROWS_AS(generate_task(7, Difficulty{0, 5, 20, 1, 15}), TaskError);
  CHECK_THROWS_AS(generate_task(7, Difficulty{1, 16, 20, 1, 15}), TaskError);
  CHECK_NOTHROW(generate_task(7, Difficulty{3, 4, 20, 1, 15}));
}

TEST_CASE("generated schedules are distinct and strictly before consume_step") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const Difficulty d{1 + static_cast<int>(seed % 4), 5 + static_cast<int>(seed % 7), 20, 1, 15};
    const TaskSpec t = generate_task(seed, d);
    std::set<int> steps;
    for (const auto& a : t.required_anchors) {
      CHECK(a.reveal_step < t.consume_step);
      steps.insert(a.reveal_step);
    }
    CHECK(steps.size() == t.required_anchors.size());
    CHECK(t.consume_step <= t.horizon_cap);
  }
}

TEST_CASE("reset emits instruction, noise and trap units") {
  const Environment env(manual_task(2), Skin::kWeb);
  const auto [state, obs] = env.reset();
  CHECK(obs.units.size() == 22);
  CHECK(count_kind(obs, UnitKind::kInstruction) == 1);
  CHECK(count_kind(obs, UnitKind::kNoise) == 20);
  CHECK(count_kind(obs, UnitKind::kTrapNoise) == 1);
  CHECK(count_kind(obs, UnitKind::kAnchor) == 0);
  CHECK(state.step == 0);
  CHECK_FALSE(state.done);

  const auto again = env.reset();
  CHECK(again.second == obs);
  CHECK(again.first == state);
}

TEST_CASE("anchor scheduled at step 0 is in the first observation") {
  const TaskSpec t = manual_task(0);
  const Environment env(t, Skin::kWeb);
  const auto obs = env.reset().second;
  CHECK(obs.units.size() == 23);
  const auto it = std::find_if(obs.units.begin(), obs.units.end(),
                               [&](const InfoUnit& u) { return u.payload == t.required_anchors[0].payload; });
  REQUIRE(it != obs.units.end());
  CHECK(it->kind == UnitKind::kAnchor);
}

TEST_CASE("exact answer at the consume step earns the reward") {
  const TaskSpec t = manual_task(1);
  const Environment env(t, Skin::kWeb);
  auto [s, obs] = env.reset();
  while (s.step < t.consume_step) {
    auto r = env.step(s, next_progress(env, s));
    REQUIRE_FALSE(r.done);
    s = r.state;
  }
  SUBCASE("full set") {
    const auto r = env.step(s, Answer{t.answer_set()});
    CHECK(r.done);
    CHECK(r.reward == 1);
    CHECK_THROWS_AS(env.step(r.state, Stop{}), std::logic_error);
  }
  SUBCASE("missing anchor") {
    const auto r = env.step(s, Answer{{}});
    CHECK(r.done);
    CHECK(r.reward == 0);
  }
  SUBCASE("extra payload") {
    auto set = t.answer_set();
    set.insert(5);
    CHECK(env.step(s, Answer{set}).reward == 0);
  }
}

TEST_CASE("answer off the consume step and stop both end with zero") {
  const TaskSpec t = manual_task(0);
  const Environment env(t, Skin::kWeb);
  const auto s = env.reset().first;
  auto r = env.step(s, Answer{t.answer_set()});
  CHECK(r.done);
  CHECK(r.reward == 0);
  r = env.step(s, Stop{});
  CHECK(r.done);
  CHECK(r.reward == 0);
}

TEST_CASE("stepping past horizon_cap terminates with zero reward") {
  const Environment env(manual_task(1), Skin::kWeb);
  auto s = env.reset().first;
  int steps = 0;
  StepResult r;
  do {
    r = env.step(s, Navigate{0});
    s = r.state;
    ++steps;
  } while (!r.done);
  CHECK(steps == 16);
  CHECK(s.step == 16);
  CHECK(r.reward == 0);
}

TEST_CASE("skins differ in which action reveals the next anchor") {
  const TaskSpec t = manual_task(1);
  const Payload anchor = t.required_anchors[0].payload;
  for (Skin skin : {Skin::kWeb, Skin::kSearch}) {
    const Environment env(t, skin);
    const auto s = env.reset().first;
    const auto right = env.step(s, progress_action(skin, anchor)).observation;
    CHECK(count_kind(right, UnitKind::kAnchor) == 1);
    const EnvAction other = skin == Skin::kWeb ? EnvAction{Query{anchor}} : EnvAction{Navigate{anchor}};
    CHECK(count_kind(env.step(s, other).observation, UnitKind::kAnchor) == 0);
    CHECK(count_kind(env.step(s, progress_action(skin, anchor + 1)).observation, UnitKind::kAnchor) == 0);
  }
}

TEST_CASE("observation invariants hold across random tasks") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const TaskSpec t = generate_task(seed, Difficulty{1 + static_cast<int>(seed % 3), 6, 20, 1, 15});
    const Environment env(t, seed % 2 ? Skin::kWeb : Skin::kSearch);
    auto [s, obs] = env.reset();
    std::set<UnitId> ids;
    while (true) {
      int sum = 0;
      for (const auto& u : obs.units) {
        sum += u.token_cost;
        CHECK(u.token_cost >= 1);
        CHECK(ids.insert(u.id).second);
        if (u.kind == UnitKind::kAnchor) CHECK(t.answer_set().count(u.payload) == 1);
      }
      CHECK(sum == obs.total_tokens);
      int scheduled = 0;
      for (const auto& a : t.required_anchors) scheduled += a.reveal_step == obs.step;
      CHECK(count_kind(obs, UnitKind::kAnchor) == scheduled);

      // Noise dominance: >= 0.9 without anchors, >= 0.8 with.
      int noise_mass = 0;
      for (const auto& u : obs.units) {
        if (u.kind == UnitKind::kNoise || u.kind == UnitKind::kTrapNoise) noise_mass += u.token_cost;
      }
      const double ratio = static_cast<double>(noise_mass) / obs.total_tokens;
      CHECK(ratio >= (scheduled ? 0.8 : 0.9));

      if (s.step >= t.consume_step) break;
      auto r = env.step(s, next_progress(env, s));
      s = r.state;
      obs = r.observation;
    }
  }
}

TEST_CASE("random action sequences: terminal-only binary reward within the horizon") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const TaskSpec t = generate_task(static_cast<std::uint64_t>(trial), Difficulty{1, 5, 20, 1, 15});
    const Environment env(t, Skin::kWeb);
    std::vector<EnvAction> actions;
    auto play = [&](bool record) {
      auto s = env.reset().first;
      std::vector<Observation> seen;
      int reward_sum = 0;
      int steps = 0;
      for (std::size_t i = 0;; ++i) {
        EnvAction a;
        if (record) {
          const double u = rng.uniform();
          if (u < 0.05) a = Stop{};
          else if (u < 0.15) a = Answer{t.answer_set()};
          else if (u < 0.6) a = next_progress(env, s);
          else a = Navigate{rng.uniform_int(0, 5)};
          actions.push_back(a);
        } else {
          a = actions[i];
        }
        auto r = env.step(s, a);
        ++steps;
        seen.push_back(r.observation);
        if (!r.done) CHECK(r.reward == 0);
        reward_sum += r.reward;
        s = r.state;
        if (r.done) break;
      }
      CHECK(steps <= t.horizon_cap + 1);
      CHECK((reward_sum == 0 || reward_sum == 1));
      return std::pair{seen, reward_sum};
    };
    const auto first = play(true);
    const auto second = play(false);
    CHECK(first == second);
  }
}

TEST_CASE("actions format and parse back") {
  const std::vector<EnvAction> actions{Navigate{17}, Query{-3}, Answer{{1003, 1007}}, Answer{{}}, Stop{}};
  for (const auto& a : actions) CHECK(parse_action(format_action(a)) == a);
  CHECK(format_action(Answer{{1007, 1003}}) == "answer 1003,1007");
  CHECK_THROWS_AS(parse_action("jump 4"), std::invalid_argument);
  CHECK_THROWS_AS(parse_action("navigate x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_action("stop now"), std::invalid_argument);
}

TEST_CASE("task records survive serialization") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const TaskSpec t = generate_task(seed, Difficulty{2, 7, 15, 2, 15});
    CHECK(task_from_record(task_to_record(t)) == t);
  }
  TaskSpec bad = manual_task(1);
  bad.required_anchors[0].reveal_step = 4;
  CHECK_THROWS_AS(task_from_record(task_to_record(bad)), TaskError);
  CHECK_THROWS(task_from_record("{\"task_id\": 1}"));
}
