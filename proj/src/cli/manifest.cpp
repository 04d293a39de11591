#include <json.hpp>

#include <fstream>

#include "ktnext/cli.hpp"

namespace ktnext::cli {

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["argv"] = m.argv;
  j["config"] = nlohmann::ordered_json::parse(m.config.empty() ? "{}" : m.config);
  j["seed"] = m.seed;
  j["deterministic"] = m.deterministic;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["timestamp"] = m.timestamp;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot create " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.config = j.at("config").dump();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.deterministic = j.at("deterministic").get<bool>();
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.timestamp = j.at("timestamp").get<std::string>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Malformed, path.string() + ": " + e.what());
  }
}

}  // namespace ktnext::cli
