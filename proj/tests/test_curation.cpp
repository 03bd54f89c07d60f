#include <cmath>
#include <set>

#include "doctest.h"
#include "test_support.hpp"

using namespace actx;
using actx::testing::random_params;
using actx::testing::sample_inputs;

namespace {

InfoUnit unit(UnitId id, UnitKind kind, Payload payload, int revealed_at = 0, int cost = 5) {
  return InfoUnit{id, kind, payload, cost, revealed_at};
}

const InfoUnit kInstr = unit(1, UnitKind::kInstruction, 42);

PolicyParams saturating_anchor_keeper() {
  // affinity +100 and bias -50: anchor logit +50, everything else -50.
  PolicyParams p = PolicyParams::zeros(FeatureBasis::kFull);
  p.weights[*p.index_of("affinity")] = 100.0;
  p.weights[*p.index_of("bias")] = -50.0;
  return p;
}

}  // namespace

TEST_CASE("candidate_list uses the canonical order") {
  CurationInput in;
  in.memory = MemoryState::from_units({kInstr, unit(3, UnitKind::kNoise, 7), unit(5, UnitKind::kAnchor, 42001)}, 8);
  in.observation = Observation{2, {unit(9, UnitKind::kNoise, 8, 2), unit(2, UnitKind::kTrapNoise, 9, 2)}, 10};
  in.prev_action = Navigate{0};
  const auto c = candidate_list(in);
  REQUIRE(c.size() == 5);
  const std::vector<UnitId> ids{c[0].unit.id, c[1].unit.id, c[2].unit.id, c[3].unit.id, c[4].unit.id};
  CHECK(ids == std::vector<UnitId>{1, 3, 5, 9, 2});
  CHECK(c[1].from_memory);
  CHECK_FALSE(c[3].from_memory);
  CHECK(decision_count(in) == 4);
}

TEST_CASE("candidate_list with empty memory is instruction plus observation") {
  CurationInput in;
  in.memory = MemoryState::empty(8);
  in.observation = Observation{0, {kInstr, unit(9, UnitKind::kNoise, 8), unit(2, UnitKind::kAnchor, 42003)}, 15};
  const auto c = candidate_list(in);
  REQUIRE(c.size() == 3);
  CHECK(c[0].unit.id == 1);
  CHECK(c[1].unit.id == 9);
  CHECK(c[2].unit.id == 2);
}

TEST_CASE("duplicate ids keep the memory copy") {
  CurationInput in;
  const InfoUnit old_copy = unit(7, UnitKind::kAnchor, 42001, 0);
  InfoUnit new_copy = old_copy;
  new_copy.revealed_at = 3;
  in.memory = MemoryState::from_units({kInstr, old_copy}, 8);
  in.observation = Observation{3, {new_copy, unit(8, UnitKind::kNoise, 5, 3)}, 10};
  const auto c = candidate_list(in);
  REQUIRE(c.size() == 3);
  CHECK(c[1].unit == old_copy);
  CHECK(c[1].from_memory);
}

TEST_CASE("MemoryState rejects capacity and duplicate violations") {
  CHECK_THROWS_AS(MemoryState::from_units({kInstr, unit(2, UnitKind::kNoise, 1)}, 1), std::invalid_argument);
  CHECK_THROWS_AS(MemoryState::from_units({kInstr, kInstr}, 4), std::invalid_argument);
  const auto m = MemoryState::from_units({kInstr, unit(2, UnitKind::kNoise, 1, 0, 30)}, 4);
  CHECK(m.token_total == 35);
  CHECK(m.content_tokens() == 30);
}

TEST_CASE("saturated anchor-affine params keep exactly instruction and anchors") {
  const auto params = saturating_anchor_keeper();
  Rng rng(3);
  for (const auto& in : sample_inputs(11, 200)) {
    const auto r = curate(params, in, rng);
    std::set<UnitId> expect;
    for (const auto& c : candidate_list(in)) {
      if (c.unit.kind == UnitKind::kInstruction || c.unit.kind == UnitKind::kAnchor) expect.insert(c.unit.id);
    }
    std::set<UnitId> got;
    for (const auto& u : r.memory.units) got.insert(u.id);
    CHECK(got == expect);
  }
}

TEST_CASE("theta = 0 gives ln(0.5) for every decision") {
  const auto params = PolicyParams::zeros(FeatureBasis::kFull);
  Rng rng(5);
  for (const auto& in : sample_inputs(12, 30)) {
    const auto r = curate(params, in, rng);
    for (double lp : r.decision.logprobs) CHECK(lp == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  }
}

TEST_CASE("curate is deterministic in (params, input, seed)") {
  Rng prng(8);
  const auto params = random_params(prng, FeatureBasis::kFull, 1.0);
  for (const auto& in : sample_inputs(13, 40)) {
    Rng a(77), b(77);
    const auto ra = curate(params, in, a);
    const auto rb = curate(params, in, b);
    CHECK(ra.memory == rb.memory);
    CHECK(ra.decision.keep == rb.decision.keep);
    CHECK(ra.decision.logprobs == rb.decision.logprobs);
  }
}

TEST_CASE("logprob at theta = 0 over four decisions") {
  CurationInput in;
  in.memory = MemoryState::from_units({kInstr, unit(3, UnitKind::kNoise, 7)}, 8);
  in.observation = Observation{1, {unit(4, UnitKind::kNoise, 8, 1), unit(5, UnitKind::kAnchor, 42001, 1),
                                   unit(6, UnitKind::kTrapNoise, 9, 1)}, 15};
  in.prev_action = Navigate{0};
  const CurationDecision d{{true, false, true, false}, {}};
  // 4 ln(0.5), computed independently.
  CHECK(logprob(PolicyParams::zeros(FeatureBasis::kFull), in, d) == doctest::Approx(-2.772588722239781).epsilon(1e-14));
  CHECK_THROWS_AS(logprob(PolicyParams::zeros(FeatureBasis::kFull), in, CurationDecision{{true}, {}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(decision_distribution(PolicyParams::zeros(FeatureBasis::kFull), in, CurationDecision{{}, {}}),
                  std::invalid_argument);
}

TEST_CASE("re-evaluated logprob reproduces the sampled total") {
  Rng rng(21);
  for (const auto& in : sample_inputs(14, 300)) {
    const auto params = random_params(rng, FeatureBasis::kFull, 2.0);
    const auto r = curate(params, in, rng);
    CHECK(std::abs(logprob(params, in, r.decision) - r.decision.total_logprob()) <= 1e-12);
  }
}

TEST_CASE("logprob is monotone in an aligned logit") {
  CurationInput in;
  in.memory = MemoryState::empty(8);
  in.observation = Observation{0, {unit(4, UnitKind::kNoise, 8)}, 5};
  PolicyParams p = PolicyParams::zeros(FeatureBasis::kCompact);
  const std::size_t bias = *p.index_of("bias");
  double prev_keep = -1e300, prev_drop = 1e300;
  for (double b = -8.0; b <= 8.0; b += 0.5) {
    p.weights[bias] = b;
    const double keep = logprob(p, in, CurationDecision{{true}, {}});
    const double drop = logprob(p, in, CurationDecision{{false}, {}});
    CHECK(keep > prev_keep);
    CHECK(drop < prev_drop);
    prev_keep = keep;
    prev_drop = drop;
  }
}

TEST_CASE("decision_distribution") {
  SUBCASE("theta = 0 is uniform") {
    Rng rng(1);
    for (const auto& in : sample_inputs(15, 20)) {
      const auto params = PolicyParams::zeros(FeatureBasis::kFull);
      const auto r = curate(params, in, rng);
      for (double p : decision_distribution(params, in, r.decision)) CHECK(p == 0.5);
    }
  }
  SUBCASE("identical params give identical distributions") {
    Rng rng(2);
    for (const auto& in : sample_inputs(16, 20)) {
      const auto params = random_params(rng, FeatureBasis::kFull, 1.0);
      const auto ref = params;
      const auto r = curate(params, in, rng);
      CHECK(decision_distribution(params, in, r.decision) == decision_distribution(ref, in, r.decision));
    }
  }
  SUBCASE("bias-only candidate with bias ln 3") {
    CurationInput in;
    in.memory = MemoryState::empty(8);
    in.observation = Observation{0, {unit(4, UnitKind::kNoise, 8)}, 5};
    PolicyParams p = PolicyParams::zeros(FeatureBasis::kCompact);
    p.weights[*p.index_of("bias")] = std::log(3.0);
    const auto rows = decision_features(p.basis, in, {true});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0] == std::vector<double>{0, 0, 0, 0, 1});
    const auto probs = decision_distribution(p, in, CurationDecision{{true}, {}});
    CHECK(probs[0] == doctest::Approx(0.75).epsilon(1e-15));
  }
}

TEST_CASE("curation properties over random params and inputs") {
  Rng rng(99);
  const auto inputs = sample_inputs(17, 400);
  for (const auto& in : inputs) {
    const auto params = random_params(rng, FeatureBasis::kFull, 3.0);
    const auto r = curate(params, in, rng);
    CHECK(r.memory.units.size() <= in.memory.capacity);
    CHECK(r.memory.count(UnitKind::kInstruction) == 1);
    std::set<UnitId> ids;
    int tokens = 0;
    for (const auto& u : r.memory.units) {
      CHECK(ids.insert(u.id).second);
      tokens += u.token_cost;
    }
    CHECK(tokens == r.memory.token_total);
    CHECK(r.decision.keep.size() == decision_count(in));
    for (double lp : r.decision.logprobs) CHECK(lp <= 0.0);

    // exp(logprob) equals the product of per-decision probabilities.
    const auto probs = decision_distribution(params, in, r.decision);
    double product = 1.0;
    for (std::size_t j = 0; j < probs.size(); ++j) {
      CHECK(probs[j] + (1.0 - probs[j]) == 1.0);
      product *= r.decision.keep[j] ? probs[j] : 1.0 - probs[j];
    }
    const double lp = std::exp(logprob(params, in, r.decision));
    if (product > 0.0) CHECK(std::abs(lp - product) / product < 1e-10);
  }
}

TEST_CASE("weights at +-50 saturate every decision") {
  const auto inputs = sample_inputs(18, 200);
  PolicyParams all_pos = PolicyParams::zeros(FeatureBasis::kFull);
  PolicyParams all_neg = all_pos;
  for (auto& w : all_pos.weights) w = 50.0;
  for (auto& w : all_neg.weights) w = -50.0;
  Rng rng(4);
  for (const auto& params : {all_pos, all_neg, saturating_anchor_keeper()}) {
    for (const auto& in : inputs) {
      const auto r = curate(params, in, rng);
      for (double p : decision_distribution(params, in, r.decision)) CHECK((p <= 1e-15 || p >= 1.0 - 1e-15));
    }
  }
}

TEST_CASE("overflow evicts the lowest-logit kept units, later ones first on ties") {
  CurationInput in;
  in.memory = MemoryState::from_units({kInstr, unit(10, UnitKind::kNoise, 7, 0)}, 3);
  in.observation = Observation{2,
                               {unit(20, UnitKind::kNoise, 8, 2), unit(21, UnitKind::kAnchor, 42001, 2),
                                unit(22, UnitKind::kNoise, 9, 2)},
                               20};
  in.prev_action = Navigate{0};
  PolicyParams keep_all = PolicyParams::zeros(FeatureBasis::kFull);
  for (auto& w : keep_all.weights) w = 50.0;
  Rng rng(1);
  const auto r = curate(keep_all, in, rng);
  CHECK(r.decision.keep == std::vector<bool>{true, true, true, true});
  REQUIRE(r.memory.units.size() == 3);
  // The memory unit has recency 2 and origin 1 so it has the largest logit;
  // the anchor adds the affinity weight. The two fresh noise units go.
  CHECK(r.memory.units[0].id == 1);
  CHECK(r.memory.units[1].id == 10);
  CHECK(r.memory.units[2].id == 21);

  // All-equal logits (no instruction, theta = bias only): the latest go.
  CurationInput flat;
  flat.memory = MemoryState::empty(2);
  flat.observation = Observation{0, {unit(5, UnitKind::kNoise, 1), unit(6, UnitKind::kNoise, 2),
                                     unit(7, UnitKind::kNoise, 3)}, 15};
  PolicyParams bias = PolicyParams::zeros(FeatureBasis::kCompact);
  bias.weights[*bias.index_of("bias")] = 60.0;
  const auto f = curate(bias, flat, rng);
  REQUIRE(f.memory.units.size() == 2);
  CHECK(f.memory.units[0].id == 5);
  CHECK(f.memory.units[1].id == 6);
}

TEST_CASE("logprob_gradient matches finite differences") {
  Rng rng(31);
  for (const auto& in : sample_inputs(19, 50, FeatureBasis::kCompact)) {
    const auto params = random_params(rng, FeatureBasis::kCompact, 1.0);
    const auto d = curate(params, in, rng).decision;
    const auto g = logprob_gradient(params, in, d);
    for (std::size_t k = 0; k < g.size(); ++k) {
      auto plus = params, minus = params;
      plus.weights[k] += 1e-6;
      minus.weights[k] -= 1e-6;
      const double fd = (logprob(plus, in, d) - logprob(minus, in, d)) / 2e-6;
      CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("fixed strategies") {
  CurationInput in;
  in.memory = MemoryState::from_units({kInstr, unit(10, UnitKind::kNoise, 7)}, 2);
  in.observation = Observation{1, {unit(20, UnitKind::kNoise, 8, 1), unit(21, UnitKind::kAnchor, 42001, 1)}, 10};
  const auto none = retain_instruction(in);
  REQUIRE(none.units.size() == 1);
  CHECK(none.units[0].id == 1);
  const auto all = retain_all(in);
  CHECK(all.units.size() == 4);
  CHECK(all.capacity == kUnboundedCapacity);
}
