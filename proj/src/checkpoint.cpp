#include "reentry/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace reentry::model {

namespace {

constexpr char kMagic[8] = {'R', 'E', 'C', 'K', 'P', 'T', '0', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  }
  return v;
}

void put_f64(std::string& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

double get_f64(const std::string& in, std::size_t at) {
  return std::bit_cast<double>(get_u64(in, at));
}

}  // namespace

std::string serialize_checkpoint(const ModelConfig& config, const ModelParams& params,
                                 const corpus::Vocabulary& vocab, const CheckpointInfo& info) {
  nlohmann::json header;
  header["format"] = "reentry-checkpoint";
  header["model_config"] = to_json(config);
  header["vocab"] = vocab.tokens();
  header["vocab_hash"] = vocab.hash();
  header["step"] = info.step;
  header["epoch"] = info.epoch;
  header["extra"] = info.extra;
  auto blocks = nlohmann::json::array();
  for (const auto* p : params.all()) {
    blocks.push_back({{"name", p->name}, {"shape", p->value.shape()}, {"dtype", "f64le"}});
  }
  header["params"] = std::move(blocks);

  const std::string text = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put_u64(out, text.size());
  out += text;
  for (const auto* p : params.all()) {
    for (double v : p->value.values()) put_f64(out, v);
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ModelParams& params, const corpus::Vocabulary& vocab,
                     const CheckpointInfo& info) {
  const auto bytes = serialize_checkpoint(config, params, vocab, info);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

LoadedCheckpoint parse_checkpoint(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  const auto header_len = get_u64(bytes, 8);
  if (header_len > bytes.size() - 16) throw std::runtime_error("checkpoint: truncated header");
  auto header = nlohmann::json::parse(bytes.substr(16, header_len));
  if (header.value("format", "") != "reentry-checkpoint") {
    throw std::runtime_error("checkpoint: unknown format");
  }

  LoadedCheckpoint ck;
  ck.config = model_config_from_json(header.at("model_config"));
  ck.vocab = corpus::Vocabulary(header.at("vocab").get<std::vector<std::string>>());
  if (ck.vocab.hash() != header.at("vocab_hash").get<std::string>()) {
    throw std::runtime_error("checkpoint: vocabulary hash mismatch");
  }
  ck.info.step = header.at("step").get<std::size_t>();
  ck.info.epoch = header.at("epoch").get<std::size_t>();
  ck.info.extra = header.at("extra");
  ck.params = std::make_unique<ModelParams>(ck.config);

  auto params = ck.params->all();
  const auto& blocks = header.at("params");
  if (blocks.size() != params.size()) throw std::runtime_error("checkpoint: parameter count mismatch");
  std::size_t at = 16 + header_len;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const auto& b = blocks[k];
    if (b.at("name").get<std::string>() != params[k]->name ||
        b.at("shape").get<std::vector<std::size_t>>() != params[k]->value.shape()) {
      throw std::runtime_error("checkpoint: block " + std::to_string(k) + " does not match " +
                               params[k]->name);
    }
    auto values = params[k]->value.values();
    if (at + 8 * values.size() > bytes.size()) throw std::runtime_error("checkpoint: truncated data");
    for (auto& v : values) {
      v = get_f64(bytes, at);
      at += 8;
    }
  }
  if (at != bytes.size()) throw std::runtime_error("checkpoint: trailing bytes");
  ck.header = std::move(header);
  return ck;
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace reentry::model
