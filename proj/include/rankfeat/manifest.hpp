#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace rankfeat {

inline constexpr const char* kToolVersion = "0.1.0";

/// Everything needed to rerun a command and get byte-identical outputs.
/// Wall-clock time is recorded only on request since it would break that.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  std::vector<std::uint64_t> seeds;
  nlohmann::json config = nlohmann::json::object();
  std::string version = kToolVersion;
  std::string kernel_isa;
  std::optional<std::string> timestamp;

  nlohmann::json to_json() const;
};

/// Reads the manifest back (argv and config only matter for reruns).
RunManifest manifest_from_json(const nlohmann::json& j);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// `<path>.manifest.json`
std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace rankfeat
