#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace actx {

// Seeds for every stochastic component are derived from a master seed with
// a counter-based scheme: derive_seed(master, {a, b, c}) folds each counter
// through a SplitMix64 finalizer. Results depend only on the counters, so a
// trajectory's randomness does not depend on which worker produced it.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> counters);

// Stream tags used with derive_seed.
enum class SeedDomain : std::uint64_t {
  kTask = 1,
  kEvalTask = 2,
  kTrajectory = 3,
  kExecutor = 4,
  kNoise = 5,
  kInit = 6,
};

inline std::uint64_t tag(SeedDomain d) { return static_cast<std::uint64_t>(d); }

// Thin wrapper over mt19937_64. The distribution helpers are written out by
// hand because the std:: distributions are not bit-stable across standard
// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi]; requires lo <= hi.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

// Stateless uniform draw in [0, 1) keyed by (seed, counters).
double hashed_uniform(std::uint64_t seed, std::initializer_list<std::uint64_t> counters);

}  // namespace actx
