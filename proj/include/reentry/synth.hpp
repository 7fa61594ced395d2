#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "reentry/corpus.hpp"

namespace reentry::synth {

struct SynthConfig {
  std::map<std::string, double> pattern_weights;
  std::map<std::string, double> reentry_rates;
  std::size_t vocab_size = 500;
  std::size_t turn_len_min = 3;
  std::size_t turn_len_max = 12;
  std::size_t n_conversations = 2000;
  std::uint64_t seed = 1;
  // Users are drawn from a fixed pool so that they recur across
  // conversations and accumulate chatting history.
  std::size_t user_pool = 300;
};

// Throws std::invalid_argument describing the first problem found.
void validate(const SynthConfig& cfg);

// Reddit-like mix dominated by AB, ABA and ABC, with AB re-entering at 27%.
SynthConfig default_config();
// Re-entry fully determined by the thread pattern (ABA always returns, ABC
// never), so a model that tracks authorship can solve the main task.
SynthConfig benchmark_config();

// Letter indices of a canonical pattern ("ABCA" -> 0 1 2 0). Throws if the
// string is not canonical.
std::vector<std::size_t> parse_pattern(const std::string& pattern);

// Author ids are "u<k>"; every turn carries its author's salt token "@u<k>"
// at a random position among uniformly drawn filler words "w<i>".
std::vector<corpus::Conversation> generate_corpus(const SynthConfig& cfg);

nlohmann::json to_json(const SynthConfig& cfg);
SynthConfig config_from_json(const nlohmann::json& j);

}  // namespace reentry::synth
