#include "actx/env.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <utility>

#include "actx/rng.hpp"

namespace actx {

namespace {

constexpr Payload kFamilies = 1000;
constexpr UnitId kInstructionId = 1;
constexpr UnitId kIdStride = 100000;

// Ids are unique per task: step t, position p -> (t + 1) * stride + p.
UnitId unit_id(int step, std::size_t position) {
  return static_cast<UnitId>(step + 1) * kIdStride + static_cast<UnitId>(position);
}

Payload foreign_payload(Rng& rng, Payload family) {
  Payload other = rng.uniform_int(1, kFamilies - 2);
  if (other >= family) ++other;
  return other * kFamilyStride + rng.uniform_int(1, kFamilyStride - 1);
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

Payload parse_payload(std::string_view s) {
  s = trim(s);
  Payload v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("malformed payload '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string_view to_string(UnitKind kind) {
  switch (kind) {
    case UnitKind::kAnchor: return "anchor";
    case UnitKind::kNoise: return "noise";
    case UnitKind::kTrapNoise: return "trap";
    case UnitKind::kInstruction: return "instruction";
  }
  return "?";
}

UnitKind unit_kind_from_string(std::string_view name) {
  if (name == "anchor") return UnitKind::kAnchor;
  if (name == "noise") return UnitKind::kNoise;
  if (name == "trap") return UnitKind::kTrapNoise;
  if (name == "instruction") return UnitKind::kInstruction;
  throw std::invalid_argument("unknown unit kind '" + std::string(name) + "'");
}

std::string_view to_string(Skin skin) { return skin == Skin::kWeb ? "web" : "search"; }

Skin skin_from_string(std::string_view name) {
  if (name == "web") return Skin::kWeb;
  if (name == "search") return Skin::kSearch;
  throw std::invalid_argument("unknown skin '" + std::string(name) + "' (expected web|search)");
}

std::set<Payload> TaskSpec::answer_set() const {
  std::set<Payload> out;
  for (const auto& a : required_anchors) out.insert(a.payload);
  return out;
}

TaskSpec generate_task(std::uint64_t seed, const Difficulty& d) {
  if (d.anchors < 1) throw TaskError("difficulty.anchors must be >= 1");
  if (d.horizon > d.horizon_cap) throw TaskError("difficulty.horizon must be <= horizon_cap");
  if (d.horizon < d.anchors + 1) throw TaskError("difficulty.horizon must be >= anchors + 1");
  if (d.noise_per_step < 0 || d.trap_noise_per_step < 0)
    throw TaskError("noise counts must be nonnegative");

  Rng rng(derive_seed(seed, {tag(SeedDomain::kTask)}));
  TaskSpec t;
  t.task_id = seed;
  t.seed = seed;
  t.consume_step = d.horizon - 1;
  t.horizon_cap = d.horizon_cap;
  t.noise_per_step = d.noise_per_step;
  t.trap_noise_per_step = d.trap_noise_per_step;

  const Payload family = rng.uniform_int(1, kFamilies - 1);
  t.instruction_unit = InfoUnit{kInstructionId, UnitKind::kInstruction, family, kInstructionTokens, 0};

  // Partial Fisher-Yates over the admissible reveal steps.
  std::vector<int> steps(static_cast<std::size_t>(t.consume_step));
  for (int i = 0; i < t.consume_step; ++i) steps[static_cast<std::size_t>(i)] = i;
  std::vector<Payload> offsets(static_cast<std::size_t>(kFamilyStride - 1));
  for (std::size_t i = 0; i < offsets.size(); ++i) offsets[i] = static_cast<Payload>(i + 1);
  for (int k = 0; k < d.anchors; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    auto j = static_cast<std::size_t>(rng.uniform_int(k, t.consume_step - 1));
    std::swap(steps[ku], steps[j]);
    auto m = static_cast<std::size_t>(rng.uniform_int(k, static_cast<std::int64_t>(offsets.size()) - 1));
    std::swap(offsets[ku], offsets[m]);
    t.required_anchors.push_back(AnchorSchedule{
        family * kFamilyStride + offsets[ku], steps[ku],
        static_cast<int>(rng.uniform_int(kAnchorTokensMin, kAnchorTokensMax))});
  }
  std::sort(t.required_anchors.begin(), t.required_anchors.end(),
            [](const auto& a, const auto& b) { return a.reveal_step < b.reveal_step; });
  return t;
}

void validate_task(const TaskSpec& t) {
  if (t.instruction_unit.kind != UnitKind::kInstruction)
    throw TaskError("instruction_unit must have kind instruction");
  if (t.instruction_unit.token_cost < 1) throw TaskError("instruction_unit.token_cost must be >= 1");
  if (t.required_anchors.empty()) throw TaskError("required_anchors must be nonempty");
  if (t.consume_step > t.horizon_cap) throw TaskError("consume_step must be <= horizon_cap");
  if (t.noise_per_step < 0 || t.trap_noise_per_step < 0)
    throw TaskError("noise counts must be nonnegative");
  std::set<int> seen_steps;
  std::set<Payload> seen_payloads;
  for (const auto& a : t.required_anchors) {
    if (a.reveal_step < 0 || a.reveal_step >= t.consume_step)
      throw TaskError("required_anchors.reveal_step must lie in [0, consume_step)");
    if (a.token_cost < 1) throw TaskError("required_anchors.token_cost must be >= 1");
    if (payload_family(a.payload) != t.instruction_unit.payload)
      throw TaskError("required_anchors.payload must belong to the instruction family");
    if (!seen_steps.insert(a.reveal_step).second)
      throw TaskError("required_anchors.reveal_step values must be distinct");
    if (!seen_payloads.insert(a.payload).second)
      throw TaskError("required_anchors.payload values must be distinct");
  }
}

std::string format_action(const EnvAction& action) {
  struct Visitor {
    std::string operator()(const Navigate& a) const { return "navigate " + std::to_string(a.target); }
    std::string operator()(const Query& a) const { return "query " + std::to_string(a.key); }
    std::string operator()(const Answer& a) const {
      std::string s = "answer ";
      bool first = true;
      for (Payload p : a.payloads) {
        if (!first) s += ',';
        s += std::to_string(p);
        first = false;
      }
      return s;
    }
    std::string operator()(const Stop&) const { return "stop"; }
  };
  return std::visit(Visitor{}, action);
}

EnvAction parse_action(std::string_view text) {
  text = trim(text);
  const auto space = text.find(' ');
  const std::string_view verb = text.substr(0, space);
  const std::string_view rest = space == std::string_view::npos ? std::string_view{} : trim(text.substr(space + 1));
  if (verb == "stop" && rest.empty()) return Stop{};
  if (verb == "navigate") return Navigate{parse_payload(rest)};
  if (verb == "query") return Query{parse_payload(rest)};
  if (verb == "answer") {
    Answer a;
    std::string_view r = rest;
    while (!r.empty()) {
      const auto comma = r.find(',');
      a.payloads.insert(parse_payload(r.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      r.remove_prefix(comma + 1);
    }
    return a;
  }
  throw std::invalid_argument("malformed action '" + std::string(text) + "'");
}

EnvAction progress_action(Skin skin, Payload target) {
  if (skin == Skin::kWeb) return Navigate{target};
  return Query{target};
}

bool is_progress_action(Skin skin, const EnvAction& action) {
  return skin == Skin::kWeb ? std::holds_alternative<Navigate>(action)
                            : std::holds_alternative<Query>(action);
}

Environment::Environment(TaskSpec task, Skin skin) : task_(std::move(task)), skin_(skin) {
  validate_task(task_);
}

Observation Environment::observe(int step, const std::vector<AnchorSchedule>& anchors) const {
  Rng rng(derive_seed(task_.seed, {tag(SeedDomain::kNoise), static_cast<std::uint64_t>(step)}));
  const Payload family = task_.instruction_unit.payload;

  std::vector<InfoUnit> body;
  body.reserve(anchors.size() + static_cast<std::size_t>(task_.noise_per_step + task_.trap_noise_per_step));
  for (const auto& a : anchors) body.push_back(InfoUnit{0, UnitKind::kAnchor, a.payload, a.token_cost, step});
  for (int i = 0; i < task_.noise_per_step; ++i) {
    const Payload p = foreign_payload(rng, family);
    body.push_back(InfoUnit{0, UnitKind::kNoise, p,
                            static_cast<int>(rng.uniform_int(kNoiseTokensMin, kNoiseTokensMax)), step});
  }
  for (int i = 0; i < task_.trap_noise_per_step; ++i) {
    const Payload p = foreign_payload(rng, family);
    body.push_back(InfoUnit{0, UnitKind::kTrapNoise, p,
                            static_cast<int>(rng.uniform_int(kNoiseTokensMin, kNoiseTokensMax)), step});
  }
  for (std::size_t i = body.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(body[i - 1], body[j]);
  }

  Observation obs;
  obs.step = step;
  if (step == 0) obs.units.push_back(task_.instruction_unit);
  for (std::size_t i = 0; i < body.size(); ++i) {
    body[i].id = unit_id(step, i);
    obs.units.push_back(body[i]);
  }
  for (const auto& u : obs.units) obs.total_tokens += u.token_cost;
  return obs;
}

std::pair<EnvState, Observation> Environment::reset() const {
  EnvState s;
  std::vector<AnchorSchedule> now;
  for (const auto& a : task_.required_anchors) {
    if (a.reveal_step == 0) {
      now.push_back(a);
      s.revealed.push_back(a.payload);
    }
  }
  return {std::move(s), observe(0, now)};
}

StepResult Environment::step(const EnvState& state, const EnvAction& action) const {
  if (state.done) throw std::logic_error("Environment::step called on a terminal state");

  StepResult r;
  r.state = state;
  r.state.last_action = action;

  auto terminate = [&](int reward) {
    r.state.done = true;
    r.state.reward = reward;
    r.done = true;
    r.reward = reward;
    r.observation = Observation{state.step, {}, 0};
    return r;
  };

  if (const auto* ans = std::get_if<Answer>(&action)) {
    const bool ok = state.step == task_.consume_step && ans->payloads == task_.answer_set();
    return terminate(ok ? 1 : 0);
  }
  if (std::holds_alternative<Stop>(action)) return terminate(0);

  const int next = state.step + 1;
  r.state.step = next;
  if (next > task_.horizon_cap) {
    r.state.done = true;
    r.done = true;
    r.observation = Observation{next, {}, 0};
    return r;
  }

  std::vector<AnchorSchedule> now;
  if (is_progress_action(skin_, action)) {
    const Payload target = skin_ == Skin::kWeb ? std::get<Navigate>(action).target : std::get<Query>(action).key;
    for (const auto& a : task_.required_anchors) {
      if (a.reveal_step == next && a.payload == target) {
        now.push_back(a);
        r.state.revealed.push_back(a.payload);
      }
    }
  }
  r.observation = observe(next, now);
  return r;
}

}  // namespace actx
