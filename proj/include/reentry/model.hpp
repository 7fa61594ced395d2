#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "reentry/corpus.hpp"
#include "reentry/nn.hpp"

namespace reentry::model {

enum class AttentionOver { Turn, Conv };

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 200;
  std::size_t hidden_dim = 200;  // per direction
  double dropout = 0.2;
  std::size_t history_cap = 10;
  // Ablations: zero initial state for the target turn instead of the history
  // path; mean pooling instead of attention.
  bool use_history = true;
  bool use_attention = true;
  AttentionOver attention_over = AttentionOver::Conv;
};

void validate(const ModelConfig& config);
nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);
std::string to_string(AttentionOver a);
AttentionOver parse_attention_over(const std::string& s);

// Every learnable weight. The word-level turn encoder is shared by context
// and history turns.
struct ModelParams {
  explicit ModelParams(const ModelConfig& config);
  ModelParams(const ModelParams&) = default;
  ModelParams& operator=(const ModelParams&) = default;

  nn::Parameter embedding;   // [vocab, embed]
  nn::BiGruParams turn_gru;  // embed -> hidden
  nn::BiGruParams history_gru;  // 2*hidden -> hidden
  nn::Parameter w_init;      // [hidden, 2*hidden]
  nn::Parameter b_init;      // [hidden]
  nn::BiGruParams conv_gru;  // 2*hidden -> hidden
  nn::Parameter w_att;       // [1, 2*hidden]
  nn::Parameter b_att;       // [1]
  nn::Parameter v_main, b_main;  // [1, 4*hidden], [1]
  nn::Parameter v_sp, b_sp;
  nn::Parameter v_rt, b_rt;

  // Fixed order shared by the optimizer, checkpoints and gradient checks.
  std::vector<nn::Parameter*> all();
  std::vector<const nn::Parameter*> all() const;
  std::size_t count() const;
  void zero_grad();
  // Xavier-uniform matrices, zero biases, embeddings U(-a, a) with a chosen
  // for unit expected row norm.
  void initialize(std::uint64_t seed);
};

// Encodes one turn; `init` seeds both directions (zeros when absent).
// Returns [forward last ; backward first], 2*hidden wide.
nn::Var encode_turn(nn::Tape& tape, ModelParams& params, std::span<const std::int32_t> tokens,
                    std::optional<nn::Var> init = std::nullopt);

// Turn encoder over each history turn, then the history-level Bi-GRU.
// Empty history gives the zero vector.
nn::Var encode_history(nn::Tape& tape, ModelParams& params,
                       const std::vector<std::vector<std::int32_t>>& history);

// tanh(W_init h_hist + b_init), shared by both directions of the target turn.
nn::Var init_target_turn(nn::Tape& tape, ModelParams& params, nn::Var h_hist);

// Conversation-level Bi-GRU over turn vectors: r_j = [fwd_j ; bwd_j].
std::vector<nn::Var> encode_conversation(nn::Tape& tape, ModelParams& params,
                                         std::span<const nn::Var> turns);

struct Pooled {
  nn::Var summary;
  nn::Var weights;
};

// softmax over w_att . x_j + b_att, then the weighted sum of x_j.
Pooled attention_pool(nn::Tape& tape, ModelParams& params, std::span<const nn::Var> items);
// Uniform weights, used by the no-attention ablation.
Pooled mean_pool(nn::Tape& tape, std::span<const nn::Var> items);

// Graph handles for one instance.
struct ForwardGraph {
  nn::Var y_main;
  nn::Var y_sp;
  nn::Var y_rt;
  std::vector<nn::Var> y_ta;
  nn::Var attention;
  std::vector<nn::Var> turn_vectors;  // h_1..h_m
  std::vector<nn::Var> conv_states;   // r_1..r_m
  nn::Var pooled;                     // r
  nn::Var h_history;
};

// `dropout_rng` is required in train mode when dropout > 0.
ForwardGraph build_forward(nn::Tape& tape, ModelParams& params, const ModelConfig& config,
                           const corpus::EncodedInstance& instance, bool train_mode,
                           Rng* dropout_rng = nullptr);

struct ForwardOutputs {
  double y_main = 0.0;
  double y_sp = 0.0;
  double y_rt = 0.0;
  std::vector<double> y_ta;
  std::vector<double> attention;
  std::vector<std::vector<double>> turn_vectors;
  std::vector<std::vector<double>> conv_states;
  std::vector<double> pooled;
};

ForwardOutputs forward(ModelParams& params, const ModelConfig& config,
                       const corpus::EncodedInstance& instance, bool train_mode = false,
                       std::uint64_t dropout_seed = 0);

}  // namespace reentry::model
