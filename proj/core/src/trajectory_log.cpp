#include "actx/trajectory_log.hpp"

#include <map>
#include <sstream>

#include "json.hpp"


namespace actx {

using nlohmann::json;

std::vector<TrajectoryLogRecord> to_records(const Trajectory& traj, const LogMeta& meta, const LengthConfig& lengths) {
  const auto none = trajectory_report(traj, Strategy::kNoMemory, meta.skin, lengths);
  const auto full = trajectory_report(traj, Strategy::kFullContext, meta.skin, lengths);
  const auto active = trajectory_report(traj, Strategy::kActive, meta.skin, lengths);

  std::vector<TrajectoryLogRecord> out;
  out.reserve(traj.steps.size());
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const auto& s = traj.steps[i];
    TrajectoryLogRecord r;
    r.run = meta.run;
    r.iteration = meta.iteration;
    r.trajectory = meta.trajectory;
    r.task_id = traj.task_id;
    r.strategy = std::string(to_string(meta.strategy));
    r.skin = std::string(to_string(meta.skin));
    r.step = s.input.observation.step;
    r.observation = s.input.observation.units;
    for (const auto& u : s.memory.units) r.memory.push_back(u.id);
    r.decision.reserve(s.decision.keep.size());
    for (bool k : s.decision.keep) r.decision.push_back(k ? '1' : '0');
    r.logprob = s.logprob;
    r.action = format_action(s.action);
    r.done = i + 1 == traj.steps.size();
    if (r.done) r.reward = traj.reward;
    r.context = TurnContext{none.per_turn[i], full.per_turn[i], active.per_turn[i]};
    out.push_back(std::move(r));
  }
  return out;
}

std::string record_to_line(const TrajectoryLogRecord& r) {
  json obs = json::array();
  for (const auto& u : r.observation) {
    obs.push_back({{"id", u.id},
                   {"kind", std::string(to_string(u.kind))},
                   {"payload", u.payload},
                   {"cost", u.token_cost},
                   {"t", u.revealed_at}});
  }
  json j{{"run", r.run},
         {"iteration", r.iteration},
         {"trajectory", r.trajectory},
         {"task_id", r.task_id},
         {"strategy", r.strategy},
         {"skin", r.skin},
         {"step", r.step},
         {"turn", r.step + 1},
         {"observation", obs},
         {"memory", r.memory},
         {"decision", r.decision},
         {"logprob", r.logprob},
         {"action", r.action},
         {"done", r.done},
         {"reward", r.reward ? json(*r.reward) : json(nullptr)},
         {"context",
          {{"no_memory", r.context.no_memory}, {"full_context", r.context.full_context}, {"active", r.context.active}}}};
  return j.dump();
}

TrajectoryLogRecord record_from_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    TrajectoryLogRecord r;
    j.at("run").get_to(r.run);
    j.at("iteration").get_to(r.iteration);
    j.at("trajectory").get_to(r.trajectory);
    j.at("task_id").get_to(r.task_id);
    j.at("strategy").get_to(r.strategy);
    j.at("skin").get_to(r.skin);
    j.at("step").get_to(r.step);
    for (const auto& u : j.at("observation")) {
      r.observation.push_back(InfoUnit{u.at("id").get<UnitId>(), unit_kind_from_string(u.at("kind").get<std::string>()),
                                       u.at("payload").get<Payload>(), u.at("cost").get<int>(), u.at("t").get<int>()});
    }
    j.at("memory").get_to(r.memory);
    j.at("decision").get_to(r.decision);
    j.at("logprob").get_to(r.logprob);
    j.at("action").get_to(r.action);
    j.at("done").get_to(r.done);
    if (!j.at("reward").is_null()) r.reward = j.at("reward").get<int>();
    const auto& c = j.at("context");
    r.context = TurnContext{c.at("no_memory").get<Tokens>(), c.at("full_context").get<Tokens>(),
                            c.at("active").get<Tokens>()};
    return r;
  } catch (const json::exception& e) {
    throw LogError(std::string("malformed log record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw LogError(std::string("malformed log record: ") + e.what());
  }
}

TrajectoryLogWriter::TrajectoryLogWriter(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  tmp_ = path_;
  tmp_ += ".tmp";
  out_.open(tmp_, std::ios::binary | std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot open " + tmp_.string() + " for writing");
}

TrajectoryLogWriter::~TrajectoryLogWriter() {
  if (out_.is_open()) {
    try {
      close();
    } catch (...) {
    }
  }
}

void TrajectoryLogWriter::write(const Trajectory& traj, const LogMeta& meta, const LengthConfig& lengths) {
  for (const auto& r : to_records(traj, meta, lengths)) out_ << record_to_line(r) << '\n';
}

void TrajectoryLogWriter::flush() { out_.flush(); }

void TrajectoryLogWriter::close() {
  if (!out_.is_open()) return;
  out_.close();
  if (!out_) throw std::runtime_error("write to " + tmp_.string() + " failed");
  std::filesystem::rename(tmp_, path_);
}

std::vector<TrajectoryLogRecord> read_log(std::istream& in) {
  std::vector<TrajectoryLogRecord> records;
  std::string line;
  std::size_t line_no = 0;
  bool open = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    TrajectoryLogRecord r;
    try {
      r = record_from_line(line);
    } catch (const LogError& e) {
      throw LogError("line " + std::to_string(line_no) + ": " + e.what());
    }
    const bool starts = records.empty() || !open;
    if (starts) {
      if (r.step != 0) throw LogError("line " + std::to_string(line_no) + ": trajectory does not start at step 0");
    } else {
      const auto& prev = records.back();
      if (r.run != prev.run || r.iteration != prev.iteration || r.trajectory != prev.trajectory ||
          r.task_id != prev.task_id) {
        throw LogError("line " + std::to_string(line_no) + ": previous trajectory is truncated");
      }
      if (r.step != prev.step + 1) throw LogError("line " + std::to_string(line_no) + ": non-consecutive step");
    }
    if (r.reward.has_value() != r.done) {
      throw LogError("line " + std::to_string(line_no) + ": reward must appear exactly on the terminal record");
    }
    open = !r.done;
    records.push_back(std::move(r));
  }
  if (open) throw LogError("log ends inside a trajectory (truncated)");
  return records;
}

std::vector<TrajectoryLogRecord> read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogError("cannot open log " + path.string());
  return read_log(in);
}

std::string render_replay(const std::vector<TrajectoryLogRecord>& records) {
  std::ostringstream os;
  std::map<UnitId, InfoUnit> seen;
  for (const auto& r : records) {
    if (r.step == 0) {
      seen.clear();
      os << "=== " << r.run << " iteration " << r.iteration << ", trajectory " << r.trajectory << " (task " << r.task_id
         << ", " << r.skin << ", " << r.strategy << ") ===\n";
    }
    for (const auto& u : r.observation) seen[u.id] = u;

    int obs_tokens = 0;
    int anchors = 0;
    for (const auto& u : r.observation) {
      obs_tokens += u.token_cost;
      if (u.kind == UnitKind::kAnchor) ++anchors;
    }
    int mem_tokens = 0;
    std::ostringstream mem;
    for (UnitId id : r.memory) {
      const auto it = seen.find(id);
      if (it == seen.end()) {
        mem << "    [" << id << "] ?\n";
        continue;
      }
      const auto& u = it->second;
      mem_tokens += u.token_cost;
      mem << "    [" << u.id << "] " << to_string(u.kind) << ' ' << u.payload << " (" << u.token_cost << " tok)\n";
    }
    std::size_t kept = 0;
    for (char c : r.decision) kept += c == '1';

    os << "Turn " << r.step + 1 << " (step " << r.step << ")\n";
    os << "  1. Memory Update: " << r.memory.size() << " units, " << mem_tokens << " tok";
    if (!r.decision.empty()) {
      os << " (kept " << kept << "/" << r.decision.size() << ", logprob " << r.logprob << ")";
    }
    os << "\n" << mem.str();
    os << "  2. Latest Observation: " << r.observation.size() << " units, " << obs_tokens << " tok, " << anchors
       << " anchor(s)\n";
    os << "  3. Reasoning and Action: " << r.action << "\n";
    os << "  context: no_memory=" << r.context.no_memory << " full_context=" << r.context.full_context
       << " active=" << r.context.active << "\n";
    if (r.done) os << "  Reward: " << *r.reward << "\n\n";
  }
  return os.str();
}

}  // namespace actx
