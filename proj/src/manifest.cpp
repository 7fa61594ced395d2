#include "reentry/manifest.hpp"

#include <fstream>
#include <stdexcept>

#include "reentry/corpus.hpp"

namespace reentry {

void RunManifest::add_input(const std::filesystem::path& path) {
  input_hashes[path.string()] = corpus::file_hash(path);
}

nlohmann::json to_json(const RunManifest& m) {
  return {{"subcommand", m.subcommand}, {"version", m.version},  {"seed", m.seed},
          {"config", m.config},         {"input_hashes", m.input_hashes}, {"outputs", m.outputs}};
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest " + path.string());
  out << to_json(m).dump(2) << '\n';
}

}  // namespace reentry
