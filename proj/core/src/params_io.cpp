#include "actx/params_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace actx {

std::string params_to_string(const PolicyParams& params) {
  nlohmann::json j{{"format", "actx-params"},
                   {"version", kParamsFormatVersion},
                   {"basis", std::string(to_string(params.basis))},
                   {"weights", params.weights}};
  return j.dump(2) + "\n";
}

PolicyParams params_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParamsError(std::string("params file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "actx-params") throw ParamsError("not an actx params file");
    const int version = j.at("version").get<int>();
    if (version != kParamsFormatVersion) {
      throw ParamsError("params file version " + std::to_string(version) + " is not supported (expected " +
                        std::to_string(kParamsFormatVersion) + ")");
    }
    PolicyParams p;
    p.basis = feature_basis_from_string(j.at("basis").get<std::string>());
    p.weights = j.at("weights").get<std::vector<double>>();
    if (p.weights.size() != feature_dim(p.basis)) throw ParamsError("params weight count does not match basis");
    for (double w : p.weights) {
      if (!std::isfinite(w)) throw ParamsError("params contain a non-finite weight");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParamsError(std::string("malformed params file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParamsError(std::string("malformed params file: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

void save_params(const std::filesystem::path& path, const PolicyParams& params) {
  write_file_atomic(path, params_to_string(params));
}

PolicyParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParamsError("cannot open params file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return params_from_string(ss.str());
}

}  // namespace actx
