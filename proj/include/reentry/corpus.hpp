#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace reentry::corpus {

using UserId = std::string;

struct Turn {
  UserId author;
  std::vector<std::string> tokens;
};

struct Conversation {
  std::string conv_id;
  std::vector<Turn> turns;
};

// The target user's turns from other training conversations, oldest first.
struct ChatHistory {
  std::vector<Turn> turns;
};

// An observed prefix t_1..t_m ending at a turn of the target user.
struct Instance {
  std::string conv_id;
  std::size_t position = 0;  // m, 1-based length of the context
  std::vector<Turn> context;
  UserId target;
  ChatHistory history;
  int y_main = 0;
  int y_sp = 0;
  int y_rt = 0;
  std::vector<int> y_ta;  // length m - 1
};

struct IngestOptions {
  // Drop tokens without letters and replace links with "URL".
  bool reddit_clean = false;
};

// Tokenizes one turn text: lowercase, whitespace split, optional cleaning.
// An empty result becomes the single token "<empty>".
std::vector<std::string> tokenize(const std::string& text, const IngestOptions& options = {});

// Parses JSONL of {"conv_id": str, "turns": [{"author": str, "text": str}]}.
// Conversations with fewer than two turns are skipped; `warn` receives a
// message for each (defaults to stderr).
std::vector<Conversation> ingest_jsonl(std::istream& in, const IngestOptions& options = {},
                                       const std::function<void(const std::string&)>& warn = {});
std::vector<Conversation> ingest_jsonl(const std::filesystem::path& path,
                                       const IngestOptions& options = {},
                                       const std::function<void(const std::string&)>& warn = {});

// Writes conversations back as JSONL; text is the space-joined tokens.
void write_jsonl(std::ostream& out, const std::vector<Conversation>& convs);
void write_jsonl(const std::filesystem::path& path, const std::vector<Conversation>& convs);

class Vocabulary {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;

  Vocabulary();
  // Tokens in index order, specials included.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::int32_t lookup(const std::string& token) const;
  const std::string& token(std::int32_t index) const { return tokens_.at(index); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  // FNV-1a over the newline-joined token list.
  std::string hash() const;

  std::vector<std::int32_t> encode(const std::vector<std::string>& tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

// Keeps tokens with corpus frequency >= min_count, most frequent first.
Vocabulary build_vocab(const std::vector<Conversation>& convs, std::size_t min_count);

// Reads a whitespace-separated embedding text file ("token v1 v2 ...") and
// returns, per vocabulary index, the vector if present. Rows with a dimension
// other than `dim` are an error.
std::vector<std::pair<std::int32_t, std::vector<double>>> load_embeddings(
    const std::filesystem::path& path, const Vocabulary& vocab, std::size_t dim);

// One instance per position m in [min_prefix, M] of every conversation,
// sorted by conv_id then position. Auxiliary labels are derived here.
std::vector<Instance> extract_instances(const std::vector<Conversation>& convs,
                                        std::size_t min_prefix = 2);

// Attaches the target user's turns from train_convs (excluding the instance's
// own conversation), keeping the `cap` most recent. Posting order is the
// order of train_convs, then turn order.
void build_histories(std::vector<Instance>& instances,
                     const std::vector<Conversation>& train_convs, std::size_t cap);

struct Split {
  std::vector<Conversation> train;
  std::vector<Conversation> valid;
  std::vector<Conversation> test;
};

// Conversation-level split; sizes are round(n * ratio) for train and valid,
// the remainder for test. Each part keeps input order.
Split split(const std::vector<Conversation>& convs, std::array<double, 3> ratios,
            std::uint64_t seed);

// Integer-encoded view of an instance consumed by the model.
struct EncodedInstance {
  std::vector<std::vector<std::int32_t>> context;
  std::vector<std::vector<std::int32_t>> history;
  int y_main = 0;
  int y_sp = 0;
  int y_rt = 0;
  std::vector<int> y_ta;
};

EncodedInstance encode(const Instance& instance, const Vocabulary& vocab);

nlohmann::json to_json(const Instance& instance);
Instance instance_from_json(const nlohmann::json& j);
void write_instances(std::ostream& out, const std::vector<Instance>& instances);

// FNV-1a 64 of a byte string, hex encoded.
std::string fnv1a_hex(std::string_view bytes);
std::string file_hash(const std::filesystem::path& path);

}  // namespace reentry::corpus
