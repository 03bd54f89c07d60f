#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "actx/curation.hpp"

namespace actx {

inline constexpr int kParamsFormatVersion = 1;

class ParamsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// {"format": "actx-params", "version": 1, "basis": "full", "weights": [...]}
std::string params_to_string(const PolicyParams& params);
PolicyParams params_from_string(const std::string& text);

// Writes to a sibling temporary file and renames it into place.
void save_params(const std::filesystem::path& path, const PolicyParams& params);
PolicyParams load_params(const std::filesystem::path& path);

// Atomic whole-file write used for every run artifact.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace actx
