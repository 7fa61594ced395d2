#include "reentry/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "reentry/random.hpp"

namespace reentry::synth {

namespace {

std::size_t distinct_users(const std::vector<std::size_t>& letters) {
  std::size_t d = 0;
  for (auto l : letters) d = std::max(d, l + 1);
  return d;
}

corpus::Turn make_turn(Rng& rng, const SynthConfig& cfg, std::size_t user) {
  corpus::Turn t;
  t.author = "u" + std::to_string(user);
  const std::size_t len =
      cfg.turn_len_min + static_cast<std::size_t>(rng.below(cfg.turn_len_max - cfg.turn_len_min + 1));
  t.tokens.reserve(len + 1);
  for (std::size_t k = 0; k < len; ++k) t.tokens.push_back("w" + std::to_string(rng.below(cfg.vocab_size)));
  const auto salt_at = static_cast<std::ptrdiff_t>(rng.below(len + 1));
  t.tokens.insert(t.tokens.begin() + salt_at, "@u" + std::to_string(user));
  return t;
}

}  // namespace

std::vector<std::size_t> parse_pattern(const std::string& pattern) {
  if (pattern.empty()) throw std::invalid_argument("pattern: empty");
  std::vector<std::size_t> letters;
  std::size_t next = 0;
  for (std::size_t i = 0; i < pattern.size();) {
    const char c = pattern[i];
    if (c < 'A' || c > 'Z') throw std::invalid_argument("pattern '" + pattern + "': bad character");
    std::size_t idx = static_cast<std::size_t>(c - 'A');
    ++i;
    if (c == 'A' && i < pattern.size() && std::isdigit(static_cast<unsigned char>(pattern[i]))) {
      std::size_t n = 0;
      while (i < pattern.size() && std::isdigit(static_cast<unsigned char>(pattern[i]))) {
        n = n * 10 + static_cast<std::size_t>(pattern[i] - '0');
        ++i;
      }
      if (n == 0) throw std::invalid_argument("pattern '" + pattern + "': bad extension index");
      idx = 25 + n;
    }
    if (idx > next) {
      throw std::invalid_argument("pattern '" + pattern + "' is not canonical");
    }
    if (idx == next) ++next;
    letters.push_back(idx);
  }
  return letters;
}

void validate(const SynthConfig& cfg) {
  if (cfg.pattern_weights.empty()) throw std::invalid_argument("synth: no patterns");
  double total = 0.0;
  std::size_t max_users = 0;
  for (const auto& [pattern, w] : cfg.pattern_weights) {
    const auto letters = parse_pattern(pattern);
    if (letters.size() < 2) {
      throw std::invalid_argument("synth: pattern '" + pattern + "' needs at least 2 turns");
    }
    if (!(w >= 0.0)) throw std::invalid_argument("synth: negative weight for '" + pattern + "'");
    total += w;
    auto rate = cfg.reentry_rates.find(pattern);
    if (rate == cfg.reentry_rates.end()) {
      throw std::invalid_argument("synth: no re-entry rate for '" + pattern + "'");
    }
    max_users = std::max(max_users, distinct_users(letters));
  }
  for (const auto& [pattern, r] : cfg.reentry_rates) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw std::invalid_argument("synth: re-entry rate for '" + pattern + "' outside [0, 1]");
    }
  }
  if (std::abs(total - 1.0) > 1e-6) throw std::invalid_argument("synth: pattern weights must sum to 1");
  if (cfg.vocab_size == 0) throw std::invalid_argument("synth: vocab_size must be positive");
  if (cfg.turn_len_min == 0 || cfg.turn_len_min > cfg.turn_len_max) {
    throw std::invalid_argument("synth: need 1 <= turn_len_min <= turn_len_max");
  }
  if (cfg.user_pool < max_users + 2) {
    throw std::invalid_argument("synth: user_pool must exceed the largest pattern by 2 users");
  }
}

SynthConfig default_config() {
  SynthConfig cfg;
  cfg.pattern_weights = {{"AB", 0.35}, {"ABA", 0.20}, {"ABC", 0.20},
                         {"ABAB", 0.08}, {"ABCD", 0.10}, {"ABCA", 0.07}};
  cfg.reentry_rates = {{"AB", 0.27}, {"ABA", 0.35}, {"ABAB", 0.40},
                       {"ABC", 0.12}, {"ABCD", 0.08}, {"ABCA", 0.20}};
  return cfg;
}

SynthConfig benchmark_config() {
  SynthConfig cfg;
  cfg.pattern_weights = {{"ABA", 0.5}, {"ABC", 0.5}};
  cfg.reentry_rates = {{"ABA", 1.0}, {"ABC", 0.0}};
  cfg.vocab_size = 20;
  cfg.turn_len_min = 1;
  cfg.turn_len_max = 3;
  cfg.user_pool = 6;
  cfg.n_conversations = 530;
  return cfg;
}

std::vector<corpus::Conversation> generate_corpus(const SynthConfig& cfg) {
  validate(cfg);
  Rng rng(cfg.seed);

  std::vector<std::pair<std::string, double>> cumulative;
  double acc = 0.0;
  for (const auto& [pattern, w] : cfg.pattern_weights) {
    acc += w;
    cumulative.emplace_back(pattern, acc);
  }

  std::vector<corpus::Conversation> convs;
  convs.reserve(cfg.n_conversations);
  for (std::size_t i = 0; i < cfg.n_conversations; ++i) {
    const double u = rng.uniform() * acc;
    std::string pattern = cumulative.back().first;
    for (const auto& [p, c] : cumulative) {
      if (u < c) {
        pattern = p;
        break;
      }
    }
    const auto letters = parse_pattern(pattern);

    // Distinct users: the pattern's participants followed by two fresh ones.
    const std::size_t needed = distinct_users(letters) + 2;
    std::vector<std::size_t> users;
    while (users.size() < needed) {
      const auto candidate = static_cast<std::size_t>(rng.below(cfg.user_pool));
      if (std::find(users.begin(), users.end(), candidate) == users.end()) users.push_back(candidate);
    }

    corpus::Conversation conv;
    char id[32];
    std::snprintf(id, sizeof id, "s%06zu", i);
    conv.conv_id = id;
    for (auto l : letters) conv.turns.push_back(make_turn(rng, cfg, users[l]));

    const std::size_t fresh = distinct_users(letters);
    if (rng.uniform() < cfg.reentry_rates.at(pattern)) {
      const std::size_t fillers = 1 + static_cast<std::size_t>(rng.below(2));
      for (std::size_t f = 0; f < fillers; ++f) conv.turns.push_back(make_turn(rng, cfg, users[fresh + f]));
      conv.turns.push_back(make_turn(rng, cfg, users[letters.back()]));
    } else {
      const std::size_t fillers = static_cast<std::size_t>(rng.below(3));
      for (std::size_t f = 0; f < fillers; ++f) conv.turns.push_back(make_turn(rng, cfg, users[fresh + f]));
    }
    convs.push_back(std::move(conv));
  }
  return convs;
}

nlohmann::json to_json(const SynthConfig& cfg) {
  return {{"pattern_weights", cfg.pattern_weights},
          {"reentry_rates", cfg.reentry_rates},
          {"vocab_size", cfg.vocab_size},
          {"turn_len_range", {cfg.turn_len_min, cfg.turn_len_max}},
          {"n_conversations", cfg.n_conversations},
          {"seed", cfg.seed},
          {"user_pool", cfg.user_pool}};
}

SynthConfig config_from_json(const nlohmann::json& j) {
  SynthConfig cfg = default_config();
  if (j.contains("pattern_weights")) {
    cfg.pattern_weights = j.at("pattern_weights").get<std::map<std::string, double>>();
  }
  if (j.contains("reentry_rates")) {
    cfg.reentry_rates = j.at("reentry_rates").get<std::map<std::string, double>>();
  }
  cfg.vocab_size = j.value("vocab_size", cfg.vocab_size);
  if (j.contains("turn_len_range")) {
    const auto range = j.at("turn_len_range").get<std::vector<std::size_t>>();
    if (range.size() != 2) throw std::invalid_argument("synth: turn_len_range needs [min, max]");
    cfg.turn_len_min = range[0];
    cfg.turn_len_max = range[1];
  }
  cfg.n_conversations = j.value("n_conversations", cfg.n_conversations);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.user_pool = j.value("user_pool", cfg.user_pool);
  return cfg;
}

}  // namespace reentry::synth
