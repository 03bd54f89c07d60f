#include "actx/curation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace actx {

namespace {

struct FeatureContext {
  int step = 0;
  Payload family = -1;
  double capacity = 1.0;
};

FeatureContext make_context(const CurationInput& input, const std::vector<Candidate>& cands) {
  FeatureContext ctx;
  ctx.step = input.observation.step;
  if (!cands.empty() && cands.front().unit.kind == UnitKind::kInstruction) ctx.family = cands.front().unit.payload;
  ctx.capacity = static_cast<double>(input.memory.capacity);
  return ctx;
}

void fill_features(FeatureBasis basis, const FeatureContext& ctx, const Candidate& c, std::size_t kept_so_far,
                   std::vector<double>& f) {
  const double recency = static_cast<double>(ctx.step - c.unit.revealed_at);
  const double affinity =
      (c.unit.kind != UnitKind::kInstruction && payload_family(c.unit.payload) == ctx.family) ? 1.0 : 0.0;
  const double origin = c.from_memory ? 1.0 : 0.0;
  const double fullness = static_cast<double>(kept_so_far) / ctx.capacity;
  f.clear();
  if (basis == FeatureBasis::kFull) {
    for (int k = 0; k < 4; ++k) f.push_back(static_cast<int>(c.unit.kind) == k ? 1.0 : 0.0);
  }
  f.push_back(recency);
  f.push_back(affinity);
  f.push_back(origin);
  f.push_back(fullness);
  f.push_back(1.0);
}

void check_params(const PolicyParams& params) {
  if (params.weights.size() != feature_dim(params.basis)) {
    throw std::invalid_argument("policy weights have dimension " + std::to_string(params.weights.size()) +
                                ", basis expects " + std::to_string(feature_dim(params.basis)));
  }
}

// Walks the decision path, calling fn(j, features, logit) for every
// droppable candidate. keep_of(j) supplies the bit that conditions later
// decisions.
template <typename KeepOf, typename Fn>
void walk_path(const PolicyParams& params, const CurationInput& input, KeepOf&& keep_of, Fn&& fn) {
  check_params(params);
  const auto cands = candidate_list(input);
  const auto ctx = make_context(input, cands);
  std::size_t kept = 0;
  std::size_t j = 0;
  std::vector<double> f;
  f.reserve(feature_dim(params.basis));
  for (const auto& c : cands) {
    if (c.unit.kind == UnitKind::kInstruction) {
      ++kept;
      continue;
    }
    fill_features(params.basis, ctx, c, kept, f);
    const double logit = dot(params.weights, f);
    const bool keep = keep_of(j, logit);
    fn(j, c, f, logit, keep);
    if (keep) ++kept;
    ++j;
  }
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

MemoryState MemoryState::from_units(std::vector<InfoUnit> units, std::size_t capacity) {
  if (capacity == 0) throw std::invalid_argument("memory capacity must be positive");
  if (units.size() > capacity) throw std::invalid_argument("memory exceeds capacity");
  std::set<UnitId> ids;
  int tokens = 0;
  for (const auto& u : units) {
    if (!ids.insert(u.id).second) throw std::invalid_argument("duplicate unit id in memory");
    tokens += u.token_cost;
  }
  return MemoryState{std::move(units), capacity, tokens};
}

bool MemoryState::contains(UnitId id) const {
  return std::any_of(units.begin(), units.end(), [id](const InfoUnit& u) { return u.id == id; });
}

int MemoryState::count(UnitKind kind) const {
  return static_cast<int>(std::count_if(units.begin(), units.end(), [kind](const InfoUnit& u) { return u.kind == kind; }));
}

int MemoryState::content_tokens() const {
  int t = 0;
  for (const auto& u : units) {
    if (u.kind != UnitKind::kInstruction) t += u.token_cost;
  }
  return t;
}

std::size_t feature_dim(FeatureBasis basis) { return basis == FeatureBasis::kFull ? 9 : 5; }

std::string_view to_string(FeatureBasis basis) { return basis == FeatureBasis::kFull ? "full" : "compact"; }

FeatureBasis feature_basis_from_string(std::string_view name) {
  if (name == "full") return FeatureBasis::kFull;
  if (name == "compact") return FeatureBasis::kCompact;
  throw std::invalid_argument("unknown feature basis '" + std::string(name) + "' (expected full|compact)");
}

std::vector<std::string_view> feature_names(FeatureBasis basis) {
  std::vector<std::string_view> names;
  if (basis == FeatureBasis::kFull) names = {"kind_anchor", "kind_noise", "kind_trap", "kind_instruction"};
  for (auto n : {"recency", "affinity", "memory_origin", "fullness", "bias"}) names.emplace_back(n);
  return names;
}

std::optional<std::size_t> PolicyParams::index_of(std::string_view feature) const {
  const auto names = feature_names(basis);
  const auto it = std::find(names.begin(), names.end(), feature);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

double CurationDecision::total_logprob() const {
  return std::accumulate(logprobs.begin(), logprobs.end(), 0.0);
}

std::vector<Candidate> candidate_list(const CurationInput& input) {
  std::vector<Candidate> out;
  out.reserve(input.memory.units.size() + input.observation.units.size());
  std::set<UnitId> seen;
  const InfoUnit* instruction = nullptr;
  for (const auto& u : input.memory.units) {
    if (u.kind == UnitKind::kInstruction && !instruction) instruction = &u;
  }
  for (const auto& u : input.observation.units) {
    if (u.kind == UnitKind::kInstruction && !instruction) instruction = &u;
  }
  if (instruction) {
    out.push_back(Candidate{*instruction, input.memory.contains(instruction->id)});
    seen.insert(instruction->id);
  }
  for (const auto& u : input.memory.units) {
    if (seen.insert(u.id).second) out.push_back(Candidate{u, true});
  }
  for (const auto& u : input.observation.units) {
    if (seen.insert(u.id).second) out.push_back(Candidate{u, false});
  }
  return out;
}

std::size_t decision_count(const CurationInput& input) {
  const auto cands = candidate_list(input);
  return static_cast<std::size_t>(std::count_if(
      cands.begin(), cands.end(), [](const Candidate& c) { return c.unit.kind != UnitKind::kInstruction; }));
}

std::vector<std::vector<double>> decision_features(FeatureBasis basis, const CurationInput& input,
                                                   const std::vector<bool>& keep) {
  PolicyParams probe = PolicyParams::zeros(basis);
  std::vector<std::vector<double>> rows;
  walk_path(
      probe, input, [&](std::size_t j, double) { return j < keep.size() && keep[j]; },
      [&](std::size_t, const Candidate&, const std::vector<double>& f, double, bool) { rows.push_back(f); });
  return rows;
}

CurationResult curate(const PolicyParams& params, const CurationInput& input, Rng& rng) {
  struct Kept {
    std::size_t position;  // index into the candidate list
    double logit;
  };
  const auto cands = candidate_list(input);
  CurationDecision decision;
  std::vector<double> logits;
  walk_path(
      params, input, [&](std::size_t, double logit) { return rng.bernoulli(sigmoid(logit)); },
      [&](std::size_t, const Candidate&, const std::vector<double>&, double logit, bool keep) {
        decision.keep.push_back(keep);
        decision.logprobs.push_back(log_sigmoid(keep ? logit : -logit));
        logits.push_back(logit);
      });

  std::vector<bool> retained(cands.size(), false);
  std::vector<Kept> kept;
  std::size_t total_kept = 0;
  for (std::size_t i = 0, j = 0; i < cands.size(); ++i) {
    if (cands[i].unit.kind == UnitKind::kInstruction) {
      retained[i] = true;
    } else {
      if (decision.keep[j]) {
        retained[i] = true;
        kept.push_back(Kept{i, logits[j]});
      }
      ++j;
    }
    if (retained[i]) ++total_kept;
  }

  if (total_kept > input.memory.capacity) {
    // Lowest logit is evicted first; among equal logits, the later position.
    std::sort(kept.begin(), kept.end(), [](const Kept& a, const Kept& b) {
      if (a.logit != b.logit) return a.logit < b.logit;
      return a.position > b.position;
    });
    for (const auto& k : kept) {
      if (total_kept <= input.memory.capacity) break;
      retained[k.position] = false;
      --total_kept;
    }
  }

  std::vector<InfoUnit> units;
  units.reserve(total_kept);
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (retained[i]) units.push_back(cands[i].unit);
  }
  return CurationResult{MemoryState::from_units(std::move(units), input.memory.capacity), std::move(decision)};
}

namespace {
void check_length(const CurationInput& input, const CurationDecision& decision) {
  const auto n = decision_count(input);
  if (decision.keep.size() != n) {
    throw std::invalid_argument("decision length " + std::to_string(decision.keep.size()) +
                                " does not match candidate count " + std::to_string(n));
  }
}
}  // namespace

double logprob(const PolicyParams& params, const CurationInput& input, const CurationDecision& decision) {
  check_length(input, decision);
  double total = 0.0;
  walk_path(
      params, input, [&](std::size_t j, double) { return static_cast<bool>(decision.keep[j]); },
      [&](std::size_t, const Candidate&, const std::vector<double>&, double logit, bool keep) {
        total += log_sigmoid(keep ? logit : -logit);
      });
  return total;
}

std::vector<double> decision_distribution(const PolicyParams& params, const CurationInput& input,
                                          const CurationDecision& decision) {
  check_length(input, decision);
  std::vector<double> probs;
  probs.reserve(decision.keep.size());
  walk_path(
      params, input, [&](std::size_t j, double) { return static_cast<bool>(decision.keep[j]); },
      [&](std::size_t, const Candidate&, const std::vector<double>&, double logit, bool) {
        probs.push_back(sigmoid(logit));
      });
  return probs;
}

std::vector<double> logprob_gradient(const PolicyParams& params, const CurationInput& input,
                                     const CurationDecision& decision) {
  check_length(input, decision);
  std::vector<double> g(params.weights.size(), 0.0);
  walk_path(
      params, input, [&](std::size_t j, double) { return static_cast<bool>(decision.keep[j]); },
      [&](std::size_t, const Candidate&, const std::vector<double>& f, double logit, bool keep) {
        const double coeff = (keep ? 1.0 : 0.0) - sigmoid(logit);
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += coeff * f[k];
      });
  return g;
}

MemoryState retain_instruction(const CurationInput& input) {
  std::vector<InfoUnit> units;
  for (const auto& c : candidate_list(input)) {
    if (c.unit.kind == UnitKind::kInstruction) units.push_back(c.unit);
  }
  return MemoryState::from_units(std::move(units), input.memory.capacity);
}

MemoryState retain_all(const CurationInput& input) {
  std::vector<InfoUnit> units;
  for (const auto& c : candidate_list(input)) units.push_back(c.unit);
  return MemoryState::from_units(std::move(units), kUnboundedCapacity);
}

}  // namespace actx
