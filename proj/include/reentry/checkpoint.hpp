#pragma once

// Checkpoint layout (all integers little-endian):
//   8 bytes   magic "RECKPT01"
//   8 bytes   u64 header length N
//   N bytes   JSON header: {"format", "model_config", "vocab", "vocab_hash",
//             "step", "epoch", "params": [{"name", "shape", "dtype"}], "extra"}
//   then, per header param in order, product(shape) little-endian f64 values.

#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

#include "reentry/corpus.hpp"
#include "reentry/model.hpp"

namespace reentry::model {

struct CheckpointInfo {
  std::size_t step = 0;
  std::size_t epoch = 0;
  nlohmann::json extra = nlohmann::json::object();
};

std::string serialize_checkpoint(const ModelConfig& config, const ModelParams& params,
                                 const corpus::Vocabulary& vocab, const CheckpointInfo& info);
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ModelParams& params, const corpus::Vocabulary& vocab,
                     const CheckpointInfo& info);

struct LoadedCheckpoint {
  ModelConfig config;
  std::unique_ptr<ModelParams> params;
  corpus::Vocabulary vocab;
  CheckpointInfo info;
  nlohmann::json header;
};

LoadedCheckpoint parse_checkpoint(const std::string& bytes);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace reentry::model
