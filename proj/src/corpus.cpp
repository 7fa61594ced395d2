#include "reentry/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "reentry/labeling.hpp"
#include "reentry/random.hpp"

namespace reentry::corpus {

namespace {

bool is_link(const std::string& token) {
  return token.rfind("http://", 0) == 0 || token.rfind("https://", 0) == 0 ||
         token.rfind("www.", 0) == 0;
}

bool has_letter(const std::string& token) {
  return std::any_of(token.begin(), token.end(),
                     [](unsigned char c) { return std::isalpha(c) != 0; });
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += ' ';
    s += tokens[i];
  }
  return s;
}

nlohmann::json turn_json(const Turn& t) { return {{"author", t.author}, {"tokens", t.tokens}}; }

Turn turn_from_json(const nlohmann::json& j) {
  return {j.at("author").get<std::string>(), j.at("tokens").get<std::vector<std::string>>()};
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text, const IngestOptions& options) {
  std::vector<std::string> tokens;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok) {
    for (auto& c : tok) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (options.reddit_clean) {
      if (is_link(tok)) {
        tokens.emplace_back("URL");
        continue;
      }
      if (!has_letter(tok)) continue;
    }
    tokens.push_back(std::move(tok));
  }
  if (tokens.empty()) tokens.emplace_back("<empty>");
  return tokens;
}

std::vector<Conversation> ingest_jsonl(std::istream& in, const IngestOptions& options,
                                       const std::function<void(const std::string&)>& warn) {
  auto emit = [&](const std::string& msg) {
    if (warn) {
      warn(msg);
    } else {
      std::cerr << "warning: " << msg << '\n';
    }
  };

  std::vector<Conversation> convs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(),
                    [](unsigned char c) { return std::isspace(c) != 0; })) {
      continue;
    }
    Conversation conv;
    try {
      const auto j = nlohmann::json::parse(line);
      conv.conv_id = j.at("conv_id").get<std::string>();
      for (const auto& t : j.at("turns")) {
        Turn turn;
        turn.author = t.at("author").get<std::string>();
        if (turn.author.empty()) throw std::runtime_error("empty author");
        turn.tokens = tokenize(t.at("text").get<std::string>(), options);
        conv.turns.push_back(std::move(turn));
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": malformed record: " +
                               e.what());
    }
    if (conv.turns.size() < 2) {
      emit("line " + std::to_string(line_no) + ": conversation '" + conv.conv_id +
           "' has fewer than 2 turns, skipped");
      continue;
    }
    convs.push_back(std::move(conv));
  }
  return convs;
}

std::vector<Conversation> ingest_jsonl(const std::filesystem::path& path,
                                       const IngestOptions& options,
                                       const std::function<void(const std::string&)>& warn) {
  auto in = open_in(path);
  return ingest_jsonl(in, options, warn);
}

void write_jsonl(std::ostream& out, const std::vector<Conversation>& convs) {
  for (const auto& c : convs) {
    nlohmann::json turns = nlohmann::json::array();
    for (const auto& t : c.turns) turns.push_back({{"author", t.author}, {"text", join(t.tokens)}});
    out << nlohmann::json{{"conv_id", c.conv_id}, {"turns", std::move(turns)}}.dump() << '\n';
  }
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Conversation>& convs) {
  auto out = open_out(path);
  write_jsonl(out, convs);
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{"<pad>", "<unk>"}) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2 || tokens_[kPad] != "<pad>" || tokens_[kUnk] != "<unk>") {
    throw std::invalid_argument("Vocabulary: first entries must be <pad>, <unk>");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second) {
      throw std::invalid_argument("Vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }
}

std::int32_t Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::int32_t> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<std::int32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(lookup(t));
  return ids;
}

std::string Vocabulary::hash() const {
  std::string joined;
  for (const auto& t : tokens_) {
    joined += t;
    joined += '\n';
  }
  return fnv1a_hex(joined);
}

Vocabulary build_vocab(const std::vector<Conversation>& convs, std::size_t min_count) {
  if (min_count < 1) throw std::invalid_argument("build_vocab: min_count must be >= 1");
  if (convs.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& c : convs)
    for (const auto& t : c.turns)
      for (const auto& tok : t.tokens) ++freq[tok];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : freq) {
    if (n >= min_count && tok != "<pad>" && tok != "<unk>") kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens{"<pad>", "<unk>"};
  for (auto& [tok, n] : kept) tokens.push_back(tok);
  return Vocabulary(std::move(tokens));
}

std::vector<std::pair<std::int32_t, std::vector<double>>> load_embeddings(
    const std::filesystem::path& path, const Vocabulary& vocab, std::size_t dim) {
  auto in = open_in(path);
  std::vector<std::pair<std::int32_t, std::vector<double>>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok)) continue;
    std::vector<double> v;
    double x;
    while (ss >> x) v.push_back(x);
    // word2vec-style "count dim" header line.
    if (line_no == 1 && v.size() == 1) continue;
    if (v.size() != dim) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(dim) + " values, got " + std::to_string(v.size()));
    }
    const auto id = vocab.lookup(tok);
    if (id != Vocabulary::kUnk || tok == "<unk>") rows.emplace_back(id, std::move(v));
  }
  return rows;
}

// ---------------------------------------------------------------------------

std::vector<Instance> extract_instances(const std::vector<Conversation>& convs,
                                        std::size_t min_prefix) {
  if (min_prefix < 2) throw std::invalid_argument("extract_instances: min_prefix must be >= 2");
  std::vector<const Conversation*> order;
  order.reserve(convs.size());
  for (const auto& c : convs) order.push_back(&c);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* a, const auto* b) { return a->conv_id < b->conv_id; });

  std::vector<Instance> out;
  for (const auto* conv : order) {
    const auto& turns = conv->turns;
    for (std::size_t m = min_prefix; m <= turns.size(); ++m) {
      Instance inst;
      inst.conv_id = conv->conv_id;
      inst.position = m;
      inst.context.assign(turns.begin(), turns.begin() + static_cast<std::ptrdiff_t>(m));
      inst.target = turns[m - 1].author;
      inst.y_main = labeling::reentry_label(turns, m);
      inst.y_sp = labeling::sp_label(inst.context);
      inst.y_rt = labeling::rt_label(inst.context, inst.target);
      inst.y_ta = labeling::ta_labels(inst.context, inst.target);
      out.push_back(std::move(inst));
    }
  }
  return out;
}

void build_histories(std::vector<Instance>& instances,
                     const std::vector<Conversation>& train_convs, std::size_t cap) {
  struct Posted {
    std::size_t conv_index;
    const Turn* turn;
  };
  std::unordered_map<UserId, std::vector<Posted>> by_user;
  for (std::size_t ci = 0; ci < train_convs.size(); ++ci) {
    for (const auto& t : train_convs[ci].turns) by_user[t.author].push_back({ci, &t});
  }
  for (auto& inst : instances) {
    inst.history.turns.clear();
    auto it = by_user.find(inst.target);
    if (it == by_user.end() || cap == 0) continue;
    std::vector<const Turn*> picked;
    // Walk backwards to keep the most recent turns, then restore posting order.
    for (auto p = it->second.rbegin(); p != it->second.rend() && picked.size() < cap; ++p) {
      if (train_convs[p->conv_index].conv_id == inst.conv_id) continue;
      picked.push_back(p->turn);
    }
    for (auto p = picked.rbegin(); p != picked.rend(); ++p) inst.history.turns.push_back(**p);
  }
}

Split split(const std::vector<Conversation>& convs, std::array<double, 3> ratios,
            std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("split: ratios must lie in [0, 1]");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("split: ratios must sum to 1");

  const std::size_t n = convs.size();
  const auto n_train = static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(n)));
  const auto n_valid = std::min(
      n - n_train, static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(n))));

  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);

  // 0 = train, 1 = valid, 2 = test; parts keep input order.
  std::vector<int> part(n, 2);
  for (std::size_t k = 0; k < n_train; ++k) part[idx[k]] = 0;
  for (std::size_t k = n_train; k < n_train + n_valid; ++k) part[idx[k]] = 1;

  Split s;
  for (std::size_t i = 0; i < n; ++i) {
    (part[i] == 0 ? s.train : part[i] == 1 ? s.valid : s.test).push_back(convs[i]);
  }
  return s;
}

EncodedInstance encode(const Instance& instance, const Vocabulary& vocab) {
  EncodedInstance e;
  for (const auto& t : instance.context) e.context.push_back(vocab.encode(t.tokens));
  for (const auto& t : instance.history.turns) e.history.push_back(vocab.encode(t.tokens));
  e.y_main = instance.y_main;
  e.y_sp = instance.y_sp;
  e.y_rt = instance.y_rt;
  e.y_ta = instance.y_ta;
  return e;
}

nlohmann::json to_json(const Instance& instance) {
  nlohmann::json context = nlohmann::json::array();
  for (const auto& t : instance.context) context.push_back(turn_json(t));
  nlohmann::json history = nlohmann::json::array();
  for (const auto& t : instance.history.turns) history.push_back(turn_json(t));
  return {{"conv_id", instance.conv_id},
          {"position", instance.position},
          {"target", instance.target},
          {"pattern", labeling::thread_pattern(instance.context)},
          {"y_main", instance.y_main},
          {"y_sp", instance.y_sp},
          {"y_rt", instance.y_rt},
          {"y_ta", instance.y_ta},
          {"context", std::move(context)},
          {"history", std::move(history)}};
}

Instance instance_from_json(const nlohmann::json& j) {
  Instance inst;
  inst.conv_id = j.at("conv_id").get<std::string>();
  inst.position = j.at("position").get<std::size_t>();
  inst.target = j.at("target").get<std::string>();
  inst.y_main = j.at("y_main").get<int>();
  inst.y_sp = j.at("y_sp").get<int>();
  inst.y_rt = j.at("y_rt").get<int>();
  inst.y_ta = j.at("y_ta").get<std::vector<int>>();
  for (const auto& t : j.at("context")) inst.context.push_back(turn_from_json(t));
  for (const auto& t : j.at("history")) inst.history.turns.push_back(turn_from_json(t));
  return inst;
}

void write_instances(std::ostream& out, const std::vector<Instance>& instances) {
  for (const auto& inst : instances) out << to_json(inst).dump() << '\n';
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    h >>= 4;
  }
  return s;
}

std::string file_hash(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a_hex(ss.str());
}

}  // namespace reentry::corpus
