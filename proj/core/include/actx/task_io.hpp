#pragma once

// Structured text records for task specs, one JSON object per task. A corpus
// file holds one record per line so task sets can be reused across runs.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "actx/env.hpp"

namespace actx {

void to_json(nlohmann::json& j, const InfoUnit& u);
void from_json(const nlohmann::json& j, InfoUnit& u);
void to_json(nlohmann::json& j, const TaskSpec& t);
void from_json(const nlohmann::json& j, TaskSpec& t);

std::string task_to_record(const TaskSpec& task);
// Parses and validates; throws TaskError or nlohmann::json::exception.
TaskSpec task_from_record(const std::string& record);

void write_task_corpus(const std::filesystem::path& path, const std::vector<TaskSpec>& tasks);
std::vector<TaskSpec> read_task_corpus(const std::filesystem::path& path);

}  // namespace actx
