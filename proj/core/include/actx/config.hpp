#pragma once

// Run configuration. Config files are JSON objects; every key except `seed`
// and `env.skin` has a default, and unknown keys are rejected so typos fail
// loudly. Documented keys:
//
//   seed                      master seed (required)
//   workers                   rollout threads (1)
//   strategy                  no_memory | full_context | active (active)
//   params_path               curator params used by eval/compare (none: theta = 0)
//   task_corpus               JSONL task records for eval/compare (none: generated)
//   env.skin                  web | search (required)
//   env.anchors               1 (web) / 2 (search)
//   env.horizon               5 (web) / 6 (search)
//   env.noise_per_step        20
//   env.trap_noise_per_step   1
//   env.horizon_cap           15
//   curator.capacity          8
//   curator.basis             full | compact (full)
//   executor.trap_threshold   3
//   executor.trap_prob        0.8
//   executor.seed             master seed
//   executor.remote.{host,port,path,timeout_s,retries,max_in_flight}
//                             optional; replaces the scripted oracle
//   grpo.group_size           4 (web) / 8 (search)
//   grpo.adv_epsilon          1e-8
//   grpo.clip_ratio           0.2
//   grpo.kl_beta              0.001
//   grpo.learning_rate        1e-6
//   grpo.iterations           100
//   grpo.batch_size           8 (tasks per update)
//   eval.episodes             200
//   lengths.{system,placeholder,reasoning,action}   64, 10, 48, 16
//   output.{dir,params,curve,log,report}
//       ".", params.json, train.csv, trajectories.jsonl, contexts.csv

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "actx/accounting.hpp"
#include "actx/curation.hpp"
#include "actx/env.hpp"
#include "actx/grpo.hpp"
#include "actx/remote_executor.hpp"
#include "actx/trajectory.hpp"

namespace actx {

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::invalid_argument("config field '" + field + "': " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct RemoteConfig {
  HttpEndpoint endpoint;
  RemoteOptions options;
};

struct ExecutorConfig {
  int trap_threshold = 3;
  double trap_prob = 0.8;
  std::uint64_t seed = 0;
  std::optional<RemoteConfig> remote;
};

struct OutputConfig {
  std::filesystem::path dir = ".";
  std::string params = "params.json";
  std::string curve = "train.csv";
  std::string log = "trajectories.jsonl";
  std::string report = "contexts.csv";

  std::filesystem::path path(const std::string& name) const { return dir / name; }
};

struct RunConfig {
  std::uint64_t seed = 0;
  int workers = 1;
  Strategy strategy = Strategy::kActive;
  std::optional<std::filesystem::path> params_path;
  std::optional<std::filesystem::path> task_corpus;
  Skin skin = Skin::kWeb;
  Difficulty difficulty;
  std::size_t capacity = 8;
  FeatureBasis basis = FeatureBasis::kFull;
  ExecutorConfig executor;
  GrpoConfig grpo;
  int eval_episodes = 200;
  LengthConfig lengths;
  OutputConfig output;
};

// Defaults that depend on the skin, for callers building configs in code.
RunConfig default_config(Skin skin, std::uint64_t seed);

// Throws ConfigError naming the first offending field.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

// Fully resolved config, every key present.
nlohmann::json config_to_json(const RunConfig& cfg);

ExecutorPolicy make_executor(const ExecutorConfig& cfg);

}  // namespace actx
