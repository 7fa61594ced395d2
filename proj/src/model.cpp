#include "reentry/model.hpp"

#include <cmath>
#include <stdexcept>

namespace reentry::model {

using nn::Tape;
using nn::Var;

void validate(const ModelConfig& config) {
  if (config.vocab_size < 2) throw std::invalid_argument("model: vocab_size must be >= 2");
  if (config.embed_dim == 0 || config.hidden_dim == 0) {
    throw std::invalid_argument("model: dimensions must be positive");
  }
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) {
    throw std::invalid_argument("model: dropout must lie in [0, 1)");
  }
}

std::string to_string(AttentionOver a) { return a == AttentionOver::Turn ? "turn" : "conv"; }

AttentionOver parse_attention_over(const std::string& s) {
  if (s == "turn") return AttentionOver::Turn;
  if (s == "conv") return AttentionOver::Conv;
  throw std::invalid_argument("attention_over must be 'turn' or 'conv', got '" + s + "'");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size},
          {"embed_dim", c.embed_dim},
          {"hidden_dim", c.hidden_dim},
          {"dropout", c.dropout},
          {"history_cap", c.history_cap},
          {"use_history", c.use_history},
          {"use_attention", c.use_attention},
          {"attention_over", to_string(c.attention_over)}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.history_cap = j.at("history_cap").get<std::size_t>();
  c.use_history = j.at("use_history").get<bool>();
  c.use_attention = j.at("use_attention").get<bool>();
  c.attention_over = parse_attention_over(j.at("attention_over").get<std::string>());
  return c;
}

ModelParams::ModelParams(const ModelConfig& c)
    : embedding("embedding", {c.vocab_size, c.embed_dim}),
      turn_gru("turn_gru", c.embed_dim, c.hidden_dim),
      history_gru("history_gru", 2 * c.hidden_dim, c.hidden_dim),
      w_init("w_init", {c.hidden_dim, 2 * c.hidden_dim}),
      b_init("b_init", {c.hidden_dim}),
      conv_gru("conv_gru", 2 * c.hidden_dim, c.hidden_dim),
      w_att("w_att", {1, 2 * c.hidden_dim}),
      b_att("b_att", {1}),
      v_main("v_main", {1, 4 * c.hidden_dim}),
      b_main("b_main", {1}),
      v_sp("v_sp", {1, 4 * c.hidden_dim}),
      b_sp("b_sp", {1}),
      v_rt("v_rt", {1, 4 * c.hidden_dim}),
      b_rt("b_rt", {1}) {
  validate(c);
}

std::vector<nn::Parameter*> ModelParams::all() {
  std::vector<nn::Parameter*> out{&embedding};
  turn_gru.collect(out);
  history_gru.collect(out);
  out.push_back(&w_init);
  out.push_back(&b_init);
  conv_gru.collect(out);
  for (auto* p : {&w_att, &b_att, &v_main, &b_main, &v_sp, &b_sp, &v_rt, &b_rt}) out.push_back(p);
  return out;
}

std::vector<const nn::Parameter*> ModelParams::all() const {
  auto ptrs = const_cast<ModelParams*>(this)->all();
  return {ptrs.begin(), ptrs.end()};
}

std::size_t ModelParams::count() const {
  std::size_t n = 0;
  for (const auto* p : all()) n += p->size();
  return n;
}

void ModelParams::zero_grad() {
  for (auto* p : all()) p->zero_grad();
}

void ModelParams::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (auto* p : all()) {
    auto values = p->value.values();
    if (p == &embedding) {
      const double a = std::sqrt(3.0 / static_cast<double>(p->value.cols()));
      for (auto& x : values) x = rng.uniform(-a, a);
    } else if (p->value.shape().size() == 2) {
      const double fan = static_cast<double>(p->value.rows() + p->value.cols());
      const double a = std::sqrt(6.0 / fan);
      for (auto& x : values) x = rng.uniform(-a, a);
    } else {
      p->value.fill(0.0);
    }
  }
  for (std::size_t c = 0; c < embedding.value.cols(); ++c) {
    embedding.value.at(corpus::Vocabulary::kPad, c) = 0.0;
  }
}

// ---------------------------------------------------------------------------

Var encode_turn(Tape& tape, ModelParams& params, std::span<const std::int32_t> tokens,
                std::optional<Var> init) {
  if (tokens.empty()) throw std::invalid_argument("encode_turn: empty token list");
  std::vector<Var> embedded;
  embedded.reserve(tokens.size());
  for (auto id : tokens) {
    if (id < 0) throw std::out_of_range("encode_turn: negative token id");
    embedded.push_back(tape.row(params.embedding, static_cast<std::size_t>(id)));
  }
  const Var start = init ? *init : tape.zeros(params.turn_gru.hidden_dim());
  return nn::run_bigru(tape, params.turn_gru, embedded, start, start).summary(tape);
}

Var encode_history(Tape& tape, ModelParams& params,
                   const std::vector<std::vector<std::int32_t>>& history) {
  const std::size_t hidden = params.history_gru.hidden_dim();
  if (history.empty()) return tape.zeros(2 * hidden);
  std::vector<Var> turns;
  turns.reserve(history.size());
  for (const auto& t : history) turns.push_back(encode_turn(tape, params, t));
  const Var zero = tape.zeros(hidden);
  return nn::run_bigru(tape, params.history_gru, turns, zero, zero).summary(tape);
}

Var init_target_turn(Tape& tape, ModelParams& params, Var h_hist) {
  return tape.tanh(tape.add(tape.matvec(params.w_init, h_hist), tape.leaf(params.b_init)));
}

std::vector<Var> encode_conversation(Tape& tape, ModelParams& params, std::span<const Var> turns) {
  if (turns.empty()) throw std::invalid_argument("encode_conversation: no turns");
  const Var zero = tape.zeros(params.conv_gru.hidden_dim());
  const auto states = nn::run_bigru(tape, params.conv_gru, turns, zero, zero);
  std::vector<Var> out;
  out.reserve(turns.size());
  for (std::size_t j = 0; j < turns.size(); ++j) out.push_back(states.at(tape, j));
  return out;
}

Pooled attention_pool(Tape& tape, ModelParams& params, std::span<const Var> items) {
  if (items.empty()) throw std::invalid_argument("attention_pool: no items");
  std::vector<Var> scores;
  scores.reserve(items.size());
  const Var bias = tape.leaf(params.b_att);
  for (auto x : items) scores.push_back(tape.add(tape.matvec(params.w_att, x), bias));
  const Var weights = tape.softmax(tape.stack(scores));
  return {tape.weighted_sum(weights, items), weights};
}

Pooled mean_pool(Tape& tape, std::span<const Var> items) {
  if (items.empty()) throw std::invalid_argument("mean_pool: no items");
  const Var weights =
      tape.constant(std::vector<double>(items.size(), 1.0 / static_cast<double>(items.size())));
  return {tape.weighted_sum(weights, items), weights};
}

ForwardGraph build_forward(Tape& tape, ModelParams& params, const ModelConfig& config,
                           const corpus::EncodedInstance& instance, bool train_mode,
                           Rng* dropout_rng) {
  const std::size_t m = instance.context.size();
  if (m < 2) throw std::invalid_argument("forward: context needs at least 2 turns");
  const double rate = train_mode ? config.dropout : 0.0;
  if (rate > 0.0 && dropout_rng == nullptr) {
    throw std::invalid_argument("forward: train mode with dropout needs an rng");
  }
  auto drop = [&](Var v) { return rate > 0.0 ? tape.dropout(v, rate, *dropout_rng) : v; };

  ForwardGraph g;
  Var target_init;
  if (config.use_history) {
    const auto& hist = instance.history;
    const std::size_t keep = std::min(hist.size(), config.history_cap);
    const std::vector<std::vector<std::int32_t>> recent(hist.end() - static_cast<std::ptrdiff_t>(keep),
                                                        hist.end());
    g.h_history = encode_history(tape, params, recent);
    target_init = init_target_turn(tape, params, g.h_history);
  } else {
    g.h_history = tape.zeros(2 * config.hidden_dim);
    target_init = tape.zeros(config.hidden_dim);
  }

  g.turn_vectors.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const bool target_turn = j + 1 == m;
    const Var h = target_turn ? encode_turn(tape, params, instance.context[j], target_init)
                              : encode_turn(tape, params, instance.context[j]);
    g.turn_vectors.push_back(drop(h));
  }
  const Var h_m = g.turn_vectors.back();

  g.conv_states = encode_conversation(tape, params, g.turn_vectors);
  const auto& pool_over =
      config.attention_over == AttentionOver::Conv ? g.conv_states : g.turn_vectors;
  const Pooled pooled = config.use_attention ? attention_pool(tape, params, pool_over)
                                             : mean_pool(tape, pool_over);
  g.pooled = pooled.summary;
  g.attention = pooled.weights;

  const Var features = drop(tape.concat(g.pooled, h_m));
  auto head = [&](nn::Parameter& v, nn::Parameter& b) {
    return tape.sigmoid(tape.add(tape.matvec(v, features), tape.leaf(b)));
  };
  g.y_main = head(params.v_main, params.b_main);
  g.y_sp = head(params.v_sp, params.b_sp);
  g.y_rt = head(params.v_rt, params.b_rt);

  g.y_ta.reserve(m - 1);
  for (std::size_t j = 0; j + 1 < m; ++j) {
    g.y_ta.push_back(tape.sigmoid(tape.dot(g.turn_vectors[j], h_m)));
  }
  return g;
}

ForwardOutputs forward(ModelParams& params, const ModelConfig& config,
                       const corpus::EncodedInstance& instance, bool train_mode,
                       std::uint64_t dropout_seed) {
  Tape tape;
  Rng rng(dropout_seed);
  const auto g = build_forward(tape, params, config, instance, train_mode, &rng);
  ForwardOutputs out;
  out.y_main = tape.scalar(g.y_main);
  out.y_sp = tape.scalar(g.y_sp);
  out.y_rt = tape.scalar(g.y_rt);
  for (auto v : g.y_ta) out.y_ta.push_back(tape.scalar(v));
  out.attention = tape.value(g.attention);
  for (auto v : g.turn_vectors) out.turn_vectors.push_back(tape.value(v));
  for (auto v : g.conv_states) out.conv_states.push_back(tape.value(v));
  out.pooled = tape.value(g.pooled);
  return out;
}

}  // namespace reentry::model
