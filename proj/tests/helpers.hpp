#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "reentry/corpus.hpp"
#include "reentry/random.hpp"

namespace testing {

// Conversation whose turn k is written by authors[k]; each turn carries the
// author's name as its only token unless `tokens` supplies one per turn.
inline reentry::corpus::Conversation make_conv(const std::string& id,
                                               const std::vector<std::string>& authors) {
  reentry::corpus::Conversation c;
  c.conv_id = id;
  for (std::size_t k = 0; k < authors.size(); ++k) {
    c.turns.push_back({authors[k], {"t" + std::to_string(k), "@" + authors[k]}});
  }
  return c;
}

inline std::vector<reentry::corpus::Turn> turns_of(const std::vector<std::string>& authors) {
  return make_conv("x", authors).turns;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("reentry_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

// Author sequence over `users` distinct names, length in [1, max_len].
inline std::vector<std::string> random_authors(reentry::Rng& rng, std::size_t max_len,
                                               std::size_t users) {
  std::vector<std::string> a(1 + rng.below(max_len));
  for (auto& s : a) s = "u" + std::to_string(rng.below(users));
  return a;
}

}  // namespace testing
