#pragma once

// Working memory and the trainable curator policy.
//
// The curator walks the candidate list (memory first, then the latest
// observation) and samples an independent-looking keep/drop bit per
// candidate from a logistic model. The running "fullness" feature makes
// each bit depend on the ones sampled before it, so the joint policy is an
// autoregressive factorization with exact, cheap log-probabilities.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "actx/env.hpp"
#include "actx/rng.hpp"

namespace actx {

struct MemoryState {
  std::vector<InfoUnit> units;
  std::size_t capacity = 1;
  int token_total = 0;

  static MemoryState empty(std::size_t capacity) { return MemoryState{{}, capacity, 0}; }
  // Builds a memory from units in order; throws std::invalid_argument if an
  // invariant (capacity, unique ids) would be violated.
  static MemoryState from_units(std::vector<InfoUnit> units, std::size_t capacity);

  bool contains(UnitId id) const;
  int count(UnitKind kind) const;
  // Token total excluding the instruction unit.
  int content_tokens() const;

  friend bool operator==(const MemoryState&, const MemoryState&) = default;
};

inline constexpr std::size_t kUnboundedCapacity = static_cast<std::size_t>(-1);

struct CurationInput {
  MemoryState memory;
  Observation observation;
  std::optional<EnvAction> prev_action;
};

enum class FeatureBasis : std::uint8_t {
  // kind one-hot (anchor, noise, trap, instruction), recency, affinity,
  // memory origin, fullness, bias
  kFull,
  // recency, affinity, memory origin, fullness, bias
  kCompact,
};

std::size_t feature_dim(FeatureBasis basis);
std::string_view to_string(FeatureBasis basis);
FeatureBasis feature_basis_from_string(std::string_view name);
std::vector<std::string_view> feature_names(FeatureBasis basis);

struct PolicyParams {
  FeatureBasis basis = FeatureBasis::kFull;
  std::vector<double> weights;

  static PolicyParams zeros(FeatureBasis basis) { return {basis, std::vector<double>(feature_dim(basis), 0.0)}; }
  // Index of a named feature in this basis, or nullopt if absent.
  std::optional<std::size_t> index_of(std::string_view feature) const;

  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

struct Candidate {
  InfoUnit unit;
  bool from_memory = false;
};

// Keep bits and log-probabilities for the droppable candidates, in
// canonical order. The instruction unit is always retained and carries no
// decision.
struct CurationDecision {
  std::vector<bool> keep;
  std::vector<double> logprobs;

  double total_logprob() const;
};

// Canonical order: instruction first, then memory units oldest first, then
// observation units by position. A unit present in both memory and the
// observation appears once, as its memory copy.
std::vector<Candidate> candidate_list(const CurationInput& input);

// Number of decisions curate() samples for this input.
std::size_t decision_count(const CurationInput& input);

// Feature vectors of every decision along a realized keep path. Row j is
// the input to decision j; fullness counts units kept before j.
std::vector<std::vector<double>> decision_features(FeatureBasis basis, const CurationInput& input,
                                                   const std::vector<bool>& keep);

struct CurationResult {
  MemoryState memory;
  CurationDecision decision;
};

CurationResult curate(const PolicyParams& params, const CurationInput& input, Rng& rng);

// Sum of log p(keep_j) under params along the decision's path.
// Throws std::invalid_argument when the decision length does not match.
double logprob(const PolicyParams& params, const CurationInput& input, const CurationDecision& decision);

// Keep probabilities of each decision conditioned on the realized path.
std::vector<double> decision_distribution(const PolicyParams& params, const CurationInput& input,
                                          const CurationDecision& decision);

// d logprob / d theta = sum_j (keep_j - p_j) * feat_j.
std::vector<double> logprob_gradient(const PolicyParams& params, const CurationInput& input,
                                     const CurationDecision& decision);

// Fixed, non-learned memory strategies used by the baselines.
MemoryState retain_instruction(const CurationInput& input);
MemoryState retain_all(const CurationInput& input);

double sigmoid(double x);
double log_sigmoid(double x);
double dot(std::span<const double> a, std::span<const double> b);

}  // namespace actx
