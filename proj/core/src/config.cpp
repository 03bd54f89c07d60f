#include "actx/config.hpp"

#include <fstream>
#include <set>

namespace actx {

namespace {

using nlohmann::json;

// Reads fields of one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "must be an object");
  }

  std::string field(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  bool has(const std::string& key) {
    known_.insert(key);
    return j_.contains(key);
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      j_.at(key).get_to(out);
    } catch (const json::exception&) {
      throw ConfigError(field(key), "has the wrong type");
    }
  }

  template <typename T>
  T require(const std::string& key) {
    if (!has(key)) throw ConfigError(field(key), "missing required field");
    T out{};
    get(key, out);
    return out;
  }

  Section child(const std::string& key) {
    known_.insert(key);
    static const json kEmpty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : kEmpty, field(key));
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!known_.count(key)) throw ConfigError(field(key), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> known_;
};

template <typename F>
auto convert(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
}

}  // namespace

RunConfig default_config(Skin skin, std::uint64_t seed) {
  RunConfig c;
  c.seed = seed;
  c.skin = skin;
  c.executor.seed = seed;
  c.grpo.seed = seed;
  if (skin == Skin::kWeb) {
    c.difficulty = Difficulty{1, 5, 20, 1, 15};
    c.grpo.group_size = 4;
  } else {
    c.difficulty = Difficulty{2, 6, 20, 1, 15};
    c.grpo.group_size = 8;
  }
  return c;
}

RunConfig parse_config(const json& j) {
  Section root(j, "");
  const auto seed = root.require<std::uint64_t>("seed");

  Section env = root.child("env");
  const auto skin_name = env.require<std::string>("skin");
  const Skin skin = convert(env.field("skin"), [&] { return skin_from_string(skin_name); });
  RunConfig c = default_config(skin, seed);

  env.get("anchors", c.difficulty.anchors);
  env.get("horizon", c.difficulty.horizon);
  env.get("noise_per_step", c.difficulty.noise_per_step);
  env.get("trap_noise_per_step", c.difficulty.trap_noise_per_step);
  env.get("horizon_cap", c.difficulty.horizon_cap);
  env.finish();
  if (c.difficulty.anchors < 1) throw ConfigError("env.anchors", "must be >= 1");
  if (c.difficulty.horizon > c.difficulty.horizon_cap) throw ConfigError("env.horizon", "must be <= env.horizon_cap");
  if (c.difficulty.horizon < c.difficulty.anchors + 1) throw ConfigError("env.horizon", "must be >= env.anchors + 1");
  if (c.difficulty.noise_per_step < 0) throw ConfigError("env.noise_per_step", "must be >= 0");
  if (c.difficulty.trap_noise_per_step < 0) throw ConfigError("env.trap_noise_per_step", "must be >= 0");

  root.get("workers", c.workers);
  if (c.workers < 1) throw ConfigError("workers", "must be >= 1");
  c.grpo.workers = c.workers;
  if (root.has("strategy")) {
    const auto s = root.require<std::string>("strategy");
    c.strategy = convert("strategy", [&] { return strategy_from_string(s); });
  }
  if (root.has("params_path")) c.params_path = root.require<std::string>("params_path");
  if (root.has("task_corpus")) c.task_corpus = root.require<std::string>("task_corpus");

  Section cur = root.child("curator");
  cur.get("capacity", c.capacity);
  if (c.capacity < 1) throw ConfigError("curator.capacity", "must be >= 1");
  if (cur.has("basis")) {
    const auto b = cur.require<std::string>("basis");
    c.basis = convert("curator.basis", [&] { return feature_basis_from_string(b); });
  }
  cur.finish();

  Section ex = root.child("executor");
  ex.get("trap_threshold", c.executor.trap_threshold);
  ex.get("trap_prob", c.executor.trap_prob);
  ex.get("seed", c.executor.seed);
  if (!(c.executor.trap_prob >= 0.0 && c.executor.trap_prob <= 1.0))
    throw ConfigError("executor.trap_prob", "must be in [0, 1]");
  if (c.executor.trap_threshold < 0) throw ConfigError("executor.trap_threshold", "must be >= 0");
  if (ex.has("remote")) {
    Section rem = ex.child("remote");
    RemoteConfig rc;
    rc.endpoint.host = rem.require<std::string>("host");
    rc.endpoint.port = rem.require<int>("port");
    rem.get("path", rc.endpoint.path);
    int timeout_s = 60;
    rem.get("timeout_s", timeout_s);
    if (timeout_s < 1) throw ConfigError("executor.remote.timeout_s", "must be >= 1");
    rc.endpoint.timeout = std::chrono::seconds(timeout_s);
    rem.get("retries", rc.options.retries);
    if (rc.options.retries < 0) throw ConfigError("executor.remote.retries", "must be >= 0");
    rem.get("max_in_flight", rc.options.max_in_flight);
    if (rc.options.max_in_flight < 1) throw ConfigError("executor.remote.max_in_flight", "must be >= 1");
    rem.finish();
    c.executor.remote = rc;
  }
  ex.finish();

  Section g = root.child("grpo");
  g.get("group_size", c.grpo.group_size);
  g.get("adv_epsilon", c.grpo.adv_epsilon);
  g.get("clip_ratio", c.grpo.clip_ratio);
  g.get("kl_beta", c.grpo.kl_beta);
  g.get("learning_rate", c.grpo.learning_rate);
  g.get("iterations", c.grpo.iterations);
  g.get("batch_size", c.grpo.batch_size);
  g.finish();
  try {
    validate(c.grpo);
  } catch (const std::invalid_argument& e) {
    // Messages read "grpo.<key> must be ...".
    const std::string msg = e.what();
    const auto space = msg.find(' ');
    throw ConfigError(msg.substr(0, space), space == std::string::npos ? msg : msg.substr(space + 1));
  }

  Section ev = root.child("eval");
  ev.get("episodes", c.eval_episodes);
  ev.finish();
  if (c.eval_episodes < 1) throw ConfigError("eval.episodes", "must be >= 1");

  Section len = root.child("lengths");
  len.get("system", c.lengths.system_len);
  len.get("placeholder", c.lengths.placeholder_len);
  len.get("reasoning", c.lengths.reasoning_len);
  len.get("action", c.lengths.action_len);
  len.finish();
  for (auto [name, v] : {std::pair{"lengths.system", c.lengths.system_len},
                         std::pair{"lengths.placeholder", c.lengths.placeholder_len},
                         std::pair{"lengths.reasoning", c.lengths.reasoning_len},
                         std::pair{"lengths.action", c.lengths.action_len}}) {
    if (v < 0) throw ConfigError(name, "must be >= 0");
  }

  Section out = root.child("output");
  std::string dir = c.output.dir.string();
  out.get("dir", dir);
  c.output.dir = dir;
  out.get("params", c.output.params);
  out.get("curve", c.output.curve);
  out.get("log", c.output.log);
  out.get("report", c.output.report);
  out.finish();

  root.finish();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

json config_to_json(const RunConfig& c) {
  json j{
      {"seed", c.seed},
      {"workers", c.workers},
      {"strategy", std::string(to_string(c.strategy))},
      {"env",
       {{"skin", std::string(to_string(c.skin))},
        {"anchors", c.difficulty.anchors},
        {"horizon", c.difficulty.horizon},
        {"noise_per_step", c.difficulty.noise_per_step},
        {"trap_noise_per_step", c.difficulty.trap_noise_per_step},
        {"horizon_cap", c.difficulty.horizon_cap}}},
      {"curator", {{"capacity", c.capacity}, {"basis", std::string(to_string(c.basis))}}},
      {"executor",
       {{"trap_threshold", c.executor.trap_threshold}, {"trap_prob", c.executor.trap_prob}, {"seed", c.executor.seed}}},
      {"grpo",
       {{"group_size", c.grpo.group_size},
        {"adv_epsilon", c.grpo.adv_epsilon},
        {"clip_ratio", c.grpo.clip_ratio},
        {"kl_beta", c.grpo.kl_beta},
        {"learning_rate", c.grpo.learning_rate},
        {"iterations", c.grpo.iterations},
        {"batch_size", c.grpo.batch_size}}},
      {"eval", {{"episodes", c.eval_episodes}}},
      {"lengths",
       {{"system", c.lengths.system_len},
        {"placeholder", c.lengths.placeholder_len},
        {"reasoning", c.lengths.reasoning_len},
        {"action", c.lengths.action_len}}},
      {"output",
       {{"dir", c.output.dir.string()},
        {"params", c.output.params},
        {"curve", c.output.curve},
        {"log", c.output.log},
        {"report", c.output.report}}},
  };
  if (c.params_path) j["params_path"] = c.params_path->string();
  if (c.task_corpus) j["task_corpus"] = c.task_corpus->string();
  if (c.executor.remote) {
    const auto& r = *c.executor.remote;
    j["executor"]["remote"] = {{"host", r.endpoint.host},
                               {"port", r.endpoint.port},
                               {"path", r.endpoint.path},
                               {"timeout_s", r.endpoint.timeout.count()},
                               {"retries", r.options.retries},
                               {"max_in_flight", r.options.max_in_flight}};
  }
  return j;
}

ExecutorPolicy make_executor(const ExecutorConfig& cfg) {
  if (cfg.remote) {
    return RemoteExecutor{
        std::make_shared<RemoteClient>(make_http_transport(cfg.remote->endpoint), cfg.remote->options)};
  }
  return ScriptedOracle{cfg.trap_threshold, cfg.trap_prob, cfg.seed};
}

}  // namespace actx
