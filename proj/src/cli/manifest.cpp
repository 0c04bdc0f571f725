#include "rankfeat/manifest.hpp"

#include <fstream>

#include "rankfeat/error.hpp"

namespace rankfeat {

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["tool"] = "rankfeat";
  j["version"] = version;
  j["command"] = command;
  j["argv"] = argv;
  j["seeds"] = seeds;
  j["config"] = config;
  j["kernel_isa"] = kernel_isa;
  if (timestamp) j["timestamp"] = *timestamp;
  return j;
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.seeds = j.value("seeds", std::vector<std::uint64_t>{});
    m.config = j.value("config", nlohmann::json::object());
    m.version = j.value("version", std::string{});
    m.kernel_isa = j.value("kernel_isa", std::string{});
    if (j.contains("timestamp")) m.timestamp = j.at("timestamp").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("error while writing '" + path.string() + "'");
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".manifest.json");
}

}  // namespace rankfeat
