#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace reentry {

inline constexpr const char* kVersion = "0.1.0";

// One record per CLI run: everything needed to repeat it.
struct RunManifest {
  std::string subcommand;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_hashes;  // path -> FNV-1a of contents
  std::vector<std::string> outputs;
  std::string version = kVersion;

  void add_input(const std::filesystem::path& path);
};

nlohmann::json to_json(const RunManifest& m);
void write_manifest(const std::filesystem::path& path, const RunManifest& m);

}  // namespace reentry
