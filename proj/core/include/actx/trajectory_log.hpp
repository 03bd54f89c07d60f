#pragma once

// Line-delimited trajectory log. One JSON record per curation turn; the
// records of one trajectory are contiguous, ordered by step, and the last
// one carries done=true and the reward.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "actx/accounting.hpp"
#include "actx/trajectory.hpp"

namespace actx {

class LogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TurnContext {
  Tokens no_memory = 0;
  Tokens full_context = 0;
  Tokens active = 0;

  friend bool operator==(const TurnContext&, const TurnContext&) = default;
};

struct TrajectoryLogRecord {
  std::string run;       // "train" or "eval"
  int iteration = 0;     // training iteration, or 0 for eval runs
  int trajectory = 0;    // index within the run/iteration
  std::uint64_t task_id = 0;
  std::string strategy;
  std::string skin;
  int step = 0;          // environment step; the accounting turn is step + 1
  std::vector<InfoUnit> observation;
  std::vector<UnitId> memory;     // post-curation
  std::string decision;           // keep bits as '0'/'1'
  double logprob = 0.0;
  std::string action;
  bool done = false;
  std::optional<int> reward;      // terminal record only
  TurnContext context;

  friend bool operator==(const TrajectoryLogRecord&, const TrajectoryLogRecord&) = default;
};

struct LogMeta {
  std::string run = "train";
  int iteration = 0;
  int trajectory = 0;
  Strategy strategy = Strategy::kActive;
  Skin skin = Skin::kWeb;
};

std::vector<TrajectoryLogRecord> to_records(const Trajectory& traj, const LogMeta& meta, const LengthConfig& lengths);

std::string record_to_line(const TrajectoryLogRecord& record);
// Throws LogError on malformed input.
TrajectoryLogRecord record_from_line(const std::string& line);

// Streams records into `<path>.tmp` and renames on close().
class TrajectoryLogWriter {
 public:
  explicit TrajectoryLogWriter(std::filesystem::path path);
  ~TrajectoryLogWriter();
  TrajectoryLogWriter(const TrajectoryLogWriter&) = delete;
  TrajectoryLogWriter& operator=(const TrajectoryLogWriter&) = delete;

  void write(const Trajectory& traj, const LogMeta& meta, const LengthConfig& lengths);
  void flush();
  void close();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
};

// Parses and checks a whole log: every line well formed, trajectories
// contiguous with consecutive steps, and each trajectory terminated.
std::vector<TrajectoryLogRecord> read_log(std::istream& in);
std::vector<TrajectoryLogRecord> read_log(const std::filesystem::path& path);

// Turn-by-turn text: memory update, latest observation, action, and the
// reward on the terminal turn.
std::string render_replay(const std::vector<TrajectoryLogRecord>& records);

}  // namespace actx
