#include <atomic>
#include <thread>

#include "actx/grpo.hpp"
#include "actx/remote_executor.hpp"
#include "doctest.h"
#include "httplib.h"
#include "test_support.hpp"

using namespace actx;

namespace {

// Family 3: anchors 3001 (step 0) and 3002 (step 2), answer due at step 3.
TaskSpec two_anchor_task() {
  TaskSpec t;
  t.task_id = 9;
  t.instruction_unit = InfoUnit{1, UnitKind::kInstruction, 3, kInstructionTokens, 0};
  t.required_anchors = {{3001, 0, 6}, {3002, 2, 7}};
  t.consume_step = 3;
  t.noise_per_step = 4;
  t.seed = 5;
  validate_task(t);
  return t;
}

InfoUnit anchor(UnitId id, Payload p, int at = 0) { return InfoUnit{id, UnitKind::kAnchor, p, 6, at}; }
InfoUnit trap(UnitId id, Payload p) { return InfoUnit{id, UnitKind::kTrapNoise, p, 9, 0}; }
InfoUnit instr() { return InfoUnit{1, UnitKind::kInstruction, 3, kInstructionTokens, 0}; }

Observation obs_at(int step, std::vector<InfoUnit> units = {}) { return Observation{step, std::move(units), 0}; }

class FlakyTransport : public RemoteTransport {
 public:
  FlakyTransport(int failures, std::string reply) : failures_(failures), reply_(std::move(reply)) {}
  std::string exchange(const std::string& body) override {
    last_body = body;
    if (calls++ < failures_) throw ExecutorTransportError("simulated failure");
    return reply_;
  }
  std::atomic<int> calls{0};
  std::string last_body;

 private:
  int failures_;
  std::string reply_;
};

}  // namespace

TEST_CASE("scripted rule (a): answer when all anchors are visible at the consume step") {
  const auto task = two_anchor_task();
  const ExecutorContext ctx{&task, Skin::kWeb, 0};
  const ScriptedOracle oracle{3, 1.0, 0};
  const auto mem = MemoryState::from_units({instr(), anchor(100000, 3001)}, 8);
  CHECK(act(oracle, ctx, mem, obs_at(3, {anchor(300000, 3002, 2)})) == EnvAction{Answer{{3001, 3002}}});
  // One missing at the consume step: fall through to progress (nothing left).
  CHECK(act(oracle, ctx, mem, obs_at(3)) == EnvAction{Navigate{0}});
  // Everything visible but before the consume step: progress instead.
  const auto full = MemoryState::from_units({instr(), anchor(100000, 3001), anchor(300000, 3002, 2)}, 8);
  CHECK(act(oracle, ctx, full, obs_at(1)) == EnvAction{Navigate{3002}});
}

TEST_CASE("scripted rule (b): trap threshold derails into a wrong answer") {
  const auto task = two_anchor_task();
  const ExecutorContext ctx{&task, Skin::kSearch, 11};
  const auto three = MemoryState::from_units({instr(), trap(5, 77), trap(6, 78), trap(7, 79)}, 8);
  const auto two = MemoryState::from_units({instr(), trap(5, 77), trap(6, 78)}, 8);

  const EnvAction wrong = act(ScriptedOracle{3, 1.0, 0}, ctx, three, obs_at(1));
  CHECK(wrong == EnvAction{Answer{{77, 78, 79}}});
  CHECK(std::get<Answer>(wrong).payloads != task.answer_set());
  CHECK(act(ScriptedOracle{3, 1.0, 0}, ctx, two, obs_at(1)) == EnvAction{Query{3002}});
  CHECK(act(ScriptedOracle{3, 0.0, 0}, ctx, three, obs_at(1)) == EnvAction{Query{3002}});

  // Derailment frequency follows trap_prob and depends only on (seed, stream, step).
  const ScriptedOracle half{3, 0.3, 42};
  int derailed = 0;
  const int n = 20000;
  for (int s = 0; s < n; ++s) {
    const ExecutorContext c{&task, Skin::kWeb, static_cast<std::uint64_t>(s)};
    const auto a = act(half, c, three, obs_at(1));
    CHECK(a == act(half, c, three, obs_at(1)));
    derailed += std::holds_alternative<Answer>(a);
  }
  CHECK(std::abs(derailed / double(n) - 0.3) < 0.015);
}

TEST_CASE("scripted rule (c): progress toward the next due anchor") {
  const auto task = two_anchor_task();
  const auto mem = MemoryState::from_units({instr()}, 8);
  const ScriptedOracle oracle{ScriptedOracle::kNeverTrap, 0.0, 0};
  CHECK(act(oracle, ExecutorContext{&task, Skin::kWeb, 0}, mem, obs_at(0)) == EnvAction{Navigate{3002}});
  CHECK(act(oracle, ExecutorContext{&task, Skin::kSearch, 0}, mem, obs_at(1)) == EnvAction{Query{3002}});
  CHECK(act(oracle, ExecutorContext{&task, Skin::kSearch, 0}, mem, obs_at(2)) == EnvAction{Query{0}});
}

TEST_CASE("validate_executor") {
  CHECK_THROWS_AS(validate_executor(ScriptedOracle{3, 1.5, 0}), std::invalid_argument);
  CHECK_THROWS_AS(validate_executor(ScriptedOracle{-1, 0.5, 0}), std::invalid_argument);
  CHECK_THROWS_AS(validate_executor(RemoteExecutor{nullptr}), std::invalid_argument);
  CHECK_NOTHROW(validate_executor(ScriptedOracle{}));
}

TEST_CASE("augmented_step follows the executor and the environment") {
  const auto task = two_anchor_task();
  const AugmentedEnv aug{Environment(task, Skin::kWeb), ScriptedOracle{3, 1.0, 0}, 0};
  auto [s0, o0] = aug.env.reset();
  const auto mem0 = MemoryState::from_units({instr(), anchor(100000 + 1, 3001)}, 8);

  const auto r1 = augmented_step(aug, s0, mem0, o0);
  CHECK(r1.action_taken == EnvAction{Navigate{3002}});
  CHECK_FALSE(r1.done);
  CHECK(r1.observation.step == 1);

  // Trap-saturated memory answers wrongly and ends the episode with 0.
  const auto trapped = MemoryState::from_units({instr(), trap(5, 77), trap(6, 78), trap(7, 79)}, 8);
  const auto bad = augmented_step(aug, s0, trapped, o0);
  CHECK(std::holds_alternative<Answer>(bad.action_taken));
  CHECK(bad.done);
  CHECK(bad.reward == 0);
}

TEST_CASE("reward is caused by the memory the curator keeps") {
  // One anchor, traps disabled. Enumerate every keep/drop schedule for the
  // anchor (and noise) over the episode.
  const TaskSpec task = generate_task(123, Difficulty{1, 4, 3, 1, 15});
  REQUIRE(task.required_anchors.size() == 1);
  const int reveal = task.required_anchors[0].reveal_step;
  const AugmentedEnv aug{Environment(task, Skin::kWeb), ScriptedOracle{ScriptedOracle::kNeverTrap, 0.0, 0}, 0};

  const int steps = task.consume_step + 1;
  for (int mask = 0; mask < (1 << steps); ++mask) {
    for (int keep_noise = 0; keep_noise < 2; ++keep_noise) {
      auto [state, obs] = aug.env.reset();
      std::vector<InfoUnit> carried;
      int reward = -1;
      for (int t = 0; t <= task.horizon_cap && reward < 0; ++t) {
        std::vector<InfoUnit> next{task.instruction_unit};
        std::vector<InfoUnit> pool = carried;
        pool.insert(pool.end(), obs.units.begin(), obs.units.end());
        for (const auto& u : pool) {
          if (u.kind == UnitKind::kAnchor && (t >= steps || (mask >> t & 1))) next.push_back(u);
          if (u.kind == UnitKind::kNoise && keep_noise) next.push_back(u);
        }
        const auto mem = MemoryState::from_units(next, kUnboundedCapacity);
        carried.assign(next.begin() + 1, next.end());
        const auto r = augmented_step(aug, state, mem, obs);
        if (r.done) reward = r.reward;
        state = r.state;
        obs = r.observation;
      }
      // Only the bits from the reveal step onward can matter.
      const int needed = ((1 << steps) - 1) & ~((1 << reveal) - 1);
      const bool kept_throughout = (mask & needed) == needed;
      CHECK(reward == (kept_throughout ? 1 : 0));
    }
  }
}

TEST_CASE("remote wire format round trip") {
  const RemoteRequest req{"find family 3", "[1] instruction 3\n", "[7] anchor 3001\n"};
  const auto back = decode_request(encode_request(req));
  CHECK(back.instruction == req.instruction);
  CHECK(back.memory == req.memory);
  CHECK(back.observation == req.observation);
  for (const EnvAction& a : {EnvAction{Navigate{17}}, EnvAction{Query{0}}, EnvAction{Answer{{1003, 1007}}},
                             EnvAction{Stop{}}}) {
    CHECK(decode_response(encode_response(a)) == a);
  }
  CHECK_THROWS_AS(decode_response("not json"), ExecutorError);
  CHECK_THROWS_AS(decode_response(R"({"action": "fly 3"})"), ExecutorError);
  CHECK_THROWS_AS(decode_response(R"({"verb": "stop"})"), ExecutorError);
}

TEST_CASE("remote client retries transport failures") {
  SUBCASE("recovers within the retry budget") {
    auto t = std::make_unique<FlakyTransport>(2, R"({"action": "query 5"})");
    auto* raw = t.get();
    RemoteClient client(std::move(t), RemoteOptions{2, 1});
    CHECK(client.request(RemoteRequest{"i", "m", "o"}) == EnvAction{Query{5}});
    CHECK(raw->calls == 3);
    CHECK(decode_request(raw->last_body).memory == "m");
  }
  SUBCASE("gives up after retries") {
    auto t = std::make_unique<FlakyTransport>(3, R"({"action": "stop"})");
    auto* raw = t.get();
    RemoteClient client(std::move(t), RemoteOptions{2, 1});
    CHECK_THROWS_AS(client.request(RemoteRequest{}), ExecutorTransportError);
    CHECK(raw->calls == 3);
  }
  SUBCASE("malformed replies are not retried") {
    auto t = std::make_unique<FlakyTransport>(0, "garbage");
    auto* raw = t.get();
    RemoteClient client(std::move(t), RemoteOptions{2, 1});
    CHECK_THROWS_AS(client.request(RemoteRequest{}), ExecutorError);
    CHECK(raw->calls == 1);
    // The in-flight slot was released: a second call does not block.
    CHECK_THROWS_AS(client.request(RemoteRequest{}), ExecutorError);
    CHECK(raw->calls == 2);
  }
}

TEST_CASE("remote executor over HTTP") {
  httplib::Server server;
  std::atomic<int> hits{0};
  server.Post("/act", [&](const httplib::Request& req, httplib::Response& res) {
    const auto r = decode_request(req.body);
    ++hits;
    // Stop as soon as the executor sees an anchor in memory.
    const bool has_anchor = r.memory.find("anchor") != std::string::npos;
    res.set_content(encode_response(has_anchor ? EnvAction{Stop{}} : EnvAction{Navigate{0}}), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto client = std::make_shared<RemoteClient>(make_http_transport(HttpEndpoint{"127.0.0.1", port, "/act",
                                                                                std::chrono::seconds(5)}));
  const auto task = two_anchor_task();
  const AugmentedEnv aug{Environment(task, Skin::kWeb), RemoteExecutor{client}, 0};

  PolicyParams keep_anchor = PolicyParams::zeros(FeatureBasis::kFull);
  keep_anchor.weights[*keep_anchor.index_of("affinity")] = 100.0;
  keep_anchor.weights[*keep_anchor.index_of("bias")] = -50.0;
  const auto traj = rollout(aug, keep_anchor, RolloutOptions{Strategy::kActive, 8}, 1);
  CHECK(traj.length() == 1);
  CHECK(traj.steps[0].action == EnvAction{Stop{}});
  CHECK(traj.reward == 0);

  const auto empty = rollout(aug, PolicyParams::zeros(FeatureBasis::kFull), RolloutOptions{Strategy::kNoMemory, 8}, 1);
  CHECK(empty.length() == task.horizon_cap + 1);
  CHECK(hits == 1 + task.horizon_cap + 1);

  server.stop();
  th.join();
}

TEST_CASE("unreachable endpoint raises a transport error") {
  // Bind then close to find a port with nothing listening.
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  RemoteClient client(make_http_transport(HttpEndpoint{"127.0.0.1", port, "/act", std::chrono::seconds(1)}),
                      RemoteOptions{1, 1});
  CHECK_THROWS_AS(client.request(RemoteRequest{"i", "m", "o"}), ExecutorTransportError);
}

TEST_CASE("aborted trajectories are resampled with a fresh seed") {
  const auto task = two_anchor_task();
  SUBCASE("a single failure resamples that slot") {
    auto t = std::make_unique<FlakyTransport>(1, R"({"action": "stop"})");
    auto client = std::make_shared<RemoteClient>(std::move(t), RemoteOptions{0, 1});
    const AugmentedEnv aug{Environment(task, Skin::kWeb), RemoteExecutor{client}, 0};
    const auto batch = rollout_group(aug, PolicyParams::zeros(FeatureBasis::kFull), 8, 2, 77, 1);
    REQUIRE(batch.trajectories.size() == 2);
    CHECK(batch.trajectories[0].seed == derive_seed(77, {0, 1}));
    CHECK(batch.trajectories[1].seed == derive_seed(77, {1, 0}));
    for (const auto& tr : batch.trajectories) CHECK(tr.length() == 1);
  }
  SUBCASE("persistent failure surfaces after the attempt budget") {
    auto t = std::make_unique<FlakyTransport>(1000, R"({"action": "stop"})");
    auto* raw = t.get();
    auto client = std::make_shared<RemoteClient>(std::move(t), RemoteOptions{1, 1});
    const AugmentedEnv aug{Environment(task, Skin::kWeb), RemoteExecutor{client}, 0};
    CHECK_THROWS_AS(rollout_group(aug, PolicyParams::zeros(FeatureBasis::kFull), 8, 2, 77, 1),
                    ExecutorTransportError);
    CHECK(raw->calls == 4 * 2);
  }
}
