#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "reentry/corpus.hpp"
#include "reentry/labeling.hpp"
#include "reentry/synth.hpp"

using namespace reentry;
using namespace reentry::synth;

namespace {

SynthConfig ab_only(double rate, std::size_t n) {
  SynthConfig cfg = default_config();
  cfg.pattern_weights = {{"AB", 1.0}};
  cfg.reentry_rates = {{"AB", rate}};
  cfg.n_conversations = n;
  return cfg;
}

// Re-entry rate over instances at m=2, all of which have pattern "AB".
double ab_rate(const std::vector<corpus::Conversation>& convs) {
  std::size_t n = 0, pos = 0;
  for (const auto& inst : corpus::extract_instances(convs)) {
    if (inst.position != 2) continue;
    ++n;
    pos += inst.y_main;
  }
  return static_cast<double>(pos) / static_cast<double>(n);
}

std::string dump(const std::vector<corpus::Conversation>& convs) {
  std::ostringstream ss;
  corpus::write_jsonl(ss, convs);
  return ss.str();
}

}  // namespace

TEST_CASE("measured AB re-entry rate matches the configured rate") {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto cfg = ab_only(0.27, 10000);
    cfg.seed = seed;
    CHECK(std::abs(ab_rate(generate_corpus(cfg)) - 0.27) <= 0.02);
  }
}

TEST_CASE("rate zero never re-enters, rate one always does") {
  for (const auto& inst : corpus::extract_instances(generate_corpus(ab_only(0.0, 500)))) {
    if (inst.position == 2) CHECK(inst.y_main == 0);
  }
  CHECK(ab_rate(generate_corpus(ab_only(1.0, 500))) == 1.0);
}

TEST_CASE("generation is deterministic given the seed") {
  const auto a = dump(generate_corpus(default_config()));
  const auto b = dump(generate_corpus(default_config()));
  CHECK(a == b);
  auto other = default_config();
  other.seed = 2;
  CHECK(dump(generate_corpus(other)) != a);
}

TEST_CASE("generated conversations realize their patterns") {
  auto cfg = default_config();
  cfg.n_conversations = 300;
  const auto convs = generate_corpus(cfg);
  REQUIRE(convs.size() == 300);
  for (const auto& c : convs) {
    REQUIRE(c.turns.size() >= 2);
    const auto pattern = labeling::thread_pattern(c.turns);
    bool matches = false;
    for (const auto& [p, w] : cfg.pattern_weights) matches = matches || pattern.rfind(p, 0) == 0;
    CHECK(matches);
    for (const auto& t : c.turns) {
      // Each turn carries its author's salt token and a bounded number of fillers.
      CHECK(std::count(t.tokens.begin(), t.tokens.end(), "@" + t.author) == 1);
      CHECK(t.tokens.size() >= cfg.turn_len_min + 1);
      CHECK(t.tokens.size() <= cfg.turn_len_max + 1);
    }
  }
}

TEST_CASE("benchmark labels are fixed by the thread pattern") {
  const auto instances = corpus::extract_instances(generate_corpus(benchmark_config()));
  for (const auto& inst : instances) {
    const auto p = labeling::thread_pattern(inst.context);
    CHECK(inst.y_main == (p == "ABA" ? 1 : 0));
  }
}

TEST_CASE("invalid configurations are rejected") {
  auto cfg = default_config();
  cfg.pattern_weights["AB"] = 0.5;
  CHECK_THROWS(generate_corpus(cfg));

  cfg = default_config();
  cfg.reentry_rates["AB"] = 1.5;
  CHECK_THROWS(generate_corpus(cfg));

  cfg = default_config();
  cfg.reentry_rates.erase("ABA");
  CHECK_THROWS(generate_corpus(cfg));

  cfg = ab_only(0.3, 10);
  cfg.pattern_weights = {{"BA", 1.0}};
  cfg.reentry_rates = {{"BA", 0.3}};
  CHECK_THROWS(generate_corpus(cfg));

  cfg = ab_only(0.3, 10);
  cfg.pattern_weights = {{"A", 1.0}};
  cfg.reentry_rates = {{"A", 0.3}};
  CHECK_THROWS(generate_corpus(cfg));

  cfg = ab_only(0.3, 10);
  cfg.turn_len_min = 5;
  cfg.turn_len_max = 2;
  CHECK_THROWS(generate_corpus(cfg));

  cfg = ab_only(0.3, 10);
  cfg.user_pool = 3;
  CHECK_THROWS(generate_corpus(cfg));
}

TEST_CASE("pattern parsing") {
  CHECK(parse_pattern("ABCA") == std::vector<std::size_t>{0, 1, 2, 0});
  CHECK_THROWS(parse_pattern("AC"));
  CHECK_THROWS(parse_pattern(""));
  CHECK_THROWS(parse_pattern("Ab"));
}

TEST_CASE("config JSON round-trip") {
  auto cfg = benchmark_config();
  cfg.seed = 99;
  const auto back = config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));
}
