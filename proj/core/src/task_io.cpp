#include "actx/task_io.hpp"

#include <fstream>
#include <stdexcept>

namespace actx {

void to_json(nlohmann::json& j, const InfoUnit& u) {
  j = nlohmann::json{{"id", u.id},
                     {"kind", std::string(to_string(u.kind))},
                     {"payload", u.payload},
                     {"token_cost", u.token_cost},
                     {"revealed_at", u.revealed_at}};
}

void from_json(const nlohmann::json& j, InfoUnit& u) {
  j.at("id").get_to(u.id);
  u.kind = unit_kind_from_string(j.at("kind").get<std::string>());
  j.at("payload").get_to(u.payload);
  j.at("token_cost").get_to(u.token_cost);
  j.at("revealed_at").get_to(u.revealed_at);
}

void to_json(nlohmann::json& j, const TaskSpec& t) {
  nlohmann::json anchors = nlohmann::json::array();
  for (const auto& a : t.required_anchors) {
    anchors.push_back({{"payload", a.payload}, {"reveal_step", a.reveal_step}, {"token_cost", a.token_cost}});
  }
  j = nlohmann::json{{"task_id", t.task_id},
                     {"instruction_unit", t.instruction_unit},
                     {"required_anchors", anchors},
                     {"consume_step", t.consume_step},
                     {"horizon_cap", t.horizon_cap},
                     {"noise_per_step", t.noise_per_step},
                     {"trap_noise_per_step", t.trap_noise_per_step},
                     {"seed", t.seed}};
}

void from_json(const nlohmann::json& j, TaskSpec& t) {
  j.at("task_id").get_to(t.task_id);
  j.at("instruction_unit").get_to(t.instruction_unit);
  t.required_anchors.clear();
  for (const auto& a : j.at("required_anchors")) {
    t.required_anchors.push_back(AnchorSchedule{a.at("payload").get<Payload>(), a.at("reveal_step").get<int>(),
                                                a.at("token_cost").get<int>()});
  }
  j.at("consume_step").get_to(t.consume_step);
  j.at("horizon_cap").get_to(t.horizon_cap);
  j.at("noise_per_step").get_to(t.noise_per_step);
  j.at("trap_noise_per_step").get_to(t.trap_noise_per_step);
  j.at("seed").get_to(t.seed);
}

std::string task_to_record(const TaskSpec& task) { return nlohmann::json(task).dump(); }

TaskSpec task_from_record(const std::string& record) {
  TaskSpec t = nlohmann::json::parse(record).get<TaskSpec>();
  validate_task(t);
  return t;
}

void write_task_corpus(const std::filesystem::path& path, const std::vector<TaskSpec>& tasks) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& t : tasks) out << task_to_record(t) << '\n';
}

std::vector<TaskSpec> read_task_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<TaskSpec> tasks;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    tasks.push_back(task_from_record(line));
  }
  return tasks;
}

}  // namespace actx
