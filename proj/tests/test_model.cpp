#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reentry/gradcheck.hpp"
#include "reentry/model.hpp"

using namespace reentry;
using namespace reentry::model;
using nn::Tape;
using nn::Var;

namespace {

corpus::EncodedInstance fixed_instance() {
  corpus::EncodedInstance e;
  e.context = {{2, 3, 4}, {5, 6}, {7, 2, 9, 3}};
  e.history = {{8, 8}, {10}, {11, 4, 2}};
  e.y_main = 1;
  e.y_sp = 0;
  e.y_rt = 0;
  e.y_ta = {0, 0};
  return e;
}

std::vector<double> values(const Tape& t, Var v) { return t.value(v); }

}  // namespace

TEST_CASE("config validation and JSON round-trip") {
  auto c = gradcheck::tiny_config();
  c.attention_over = AttentionOver::Turn;
  c.use_history = false;
  CHECK(to_json(model_config_from_json(to_json(c))) == to_json(c));
  c.dropout = 1.0;
  CHECK_THROWS(validate(c));
  CHECK_THROWS(parse_attention_over("sideways"));
}

TEST_CASE("turn encoder with zero weights") {
  auto c = gradcheck::tiny_config();
  ModelParams p(c);
  Tape t;
  const std::vector<std::int32_t> tokens{2, 5, 7};
  CHECK(values(t, encode_turn(t, p, tokens)) == std::vector<double>(2 * c.hidden_dim, 0.0));

  // Gates sit at 0.5 and the candidate is 0, so each step halves the state.
  const Var init = t.constant({0.9, -0.6, 0.3});
  const auto out = values(t, encode_turn(t, p, tokens, init));
  for (std::size_t i = 0; i < c.hidden_dim; ++i) {
    CHECK(out[i] == doctest::Approx(std::pow(0.5, 3) * t.value(init)[i]));
    CHECK(out[c.hidden_dim + i] == doctest::Approx(std::pow(0.5, 3) * t.value(init)[i]));
  }
}

TEST_CASE("turn encoder is deterministic") {
  auto c = gradcheck::tiny_config();
  ModelParams p(c);
  p.initialize(3);
  Tape t;
  const std::vector<std::int32_t> tokens{2, 5, 7, 3};
  CHECK(values(t, encode_turn(t, p, tokens)) == values(t, encode_turn(t, p, tokens)));
}

TEST_CASE("history encoder") {
  auto c = gradcheck::tiny_config();
  ModelParams p(c);
  gradcheck::randomize(p, 5);
  Tape t;
  CHECK(values(t, encode_history(t, p, {})) == std::vector<double>(2 * c.hidden_dim, 0.0));

  const std::vector<std::vector<std::int32_t>> one{{3, 4}};
  const auto single = values(t, encode_history(t, p, one));
  CHECK(single.size() == 2 * c.hidden_dim);
  CHECK(std::any_of(single.begin(), single.end(), [](double v) { return v != 0.0; }));

  const std::vector<std::vector<std::int32_t>> ab{{3, 4}, {9, 2, 2}}, ba{{9, 2, 2}, {3, 4}};
  CHECK(values(t, encode_history(t, p, ab)) != values(t, encode_history(t, p, ba)));
}

TEST_CASE("target-turn initialization") {
  auto c = gradcheck::tiny_config();
  ModelParams p(c);
  Tape t;
  CHECK(values(t, init_target_turn(t, p, t.zeros(2 * c.hidden_dim))) ==
        std::vector<double>(c.hidden_dim, 0.0));

  gradcheck::randomize(p, 2);
  for (auto& v : p.w_init.value.values()) v *= 4.0;
  const auto out = values(t, init_target_turn(t, p, t.constant({3, -2, 1, 4, -5, 2})));
  for (double v : out) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("initialization gradient reaches w_init") {
  auto c = gradcheck::tiny_config();
  ModelParams p(c);
  gradcheck::randomize(p, 4);
  p.zero_grad();
  Tape t;
  const auto inst = fixed_instance();
  const auto g = build_forward(t, p, c, inst, false);
  t.backward(g.y_main);
  const auto grad = p.w_init.grad.values();
  CHECK(std::any_of(grad.begin(), grad.end(), [](double v) { return v != 0.0; }));
}

TEST_CASE("conversation encoder") {
  auto c = gradcheck::tiny_config();
  ModelParams p(c);
  Tape t;
  const std::vector<Var> one{t.constant({1, 2, 3, 4, 5, 6})};
  const auto r = encode_conversation(t, p, one);
  REQUIRE(r.size() == 1);
  CHECK(values(t, r[0]) == std::vector<double>(2 * c.hidden_dim, 0.0));
}

TEST_CASE("attention pooling") {
  auto c = gradcheck::tiny_config();
  ModelParams p(c);
  gradcheck::randomize(p, 9);
  Tape t;
  const Var x = t.constant({0.1, 0.2, -0.3, 0.4, 0.5, -0.6});
  const std::vector<Var> single{x};
  const auto one = attention_pool(t, p, single);
  CHECK(values(t, one.weights) == std::vector<double>{1.0});
  CHECK(values(t, one.summary) == values(t, x));

  const std::vector<Var> same{x, x, x, x};
  for (double a : values(t, attention_pool(t, p, same).weights)) CHECK(a == doctest::Approx(0.25));

  Rng rng(1);
  std::vector<Var> items;
  for (int j = 0; j < 5; ++j) {
    std::vector<double> v(6);
    for (auto& e : v) e = rng.uniform(-2, 2);
    items.push_back(t.constant(v));
  }
  const auto w = values(t, attention_pool(t, p, items).weights);
  CHECK(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) < 1e-9);
  const auto mw = values(t, mean_pool(t, items).weights);
  for (double a : mw) CHECK(a == doctest::Approx(0.2));
}

TEST_CASE("zero parameters give one half everywhere") {
  auto c = gradcheck::tiny_config();
  ModelParams p(c);
  const auto out = forward(p, c, fixed_instance());
  CHECK(out.y_main == 0.5);
  CHECK(out.y_sp == 0.5);
  CHECK(out.y_rt == 0.5);
  for (double y : out.y_ta) CHECK(y == 0.5);
}

TEST_CASE("outputs are probabilities with consistent shapes") {
  auto c = gradcheck::tiny_config();
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    ModelParams p(c);
    gradcheck::randomize(p, static_cast<std::uint64_t>(trial));
    const auto inst = gradcheck::random_instance(rng, c.vocab_size);
    for (bool use_attention : {true, false}) {
      for (auto over : {AttentionOver::Conv, AttentionOver::Turn}) {
        auto cfg = c;
        cfg.use_attention = use_attention;
        cfg.attention_over = over;
        const auto out = forward(p, cfg, inst);
        CHECK(out.y_ta.size() == inst.context.size() - 1);
        CHECK(out.attention.size() == inst.context.size());
        CHECK(std::abs(std::accumulate(out.attention.begin(), out.attention.end(), 0.0) - 1.0) <
              1e-9);
        for (double y : {out.y_main, out.y_sp, out.y_rt}) {
          CHECK(y > 0.0);
          CHECK(y < 1.0);
        }
      }
    }
  }
}

TEST_CASE("history only matters through the initialization path") {
  auto c = gradcheck::tiny_config();
  ModelParams p(c);
  gradcheck::randomize(p, 12);
  auto with = fixed_instance();
  auto without = with;
  without.history.clear();
  CHECK(forward(p, c, with).y_main != forward(p, c, without).y_main);

  auto ablated = c;
  ablated.use_history = false;
  CHECK(forward(p, ablated, with).y_main == forward(p, ablated, without).y_main);

  // The empty-history initialization is tanh(b_init); with b_init = 0 it
  // coincides with the ablation's zero start.
  p.b_init.value.fill(0.0);
  CHECK(forward(p, c, without).y_main == forward(p, ablated, without).y_main);
}

TEST_CASE("history is truncated to the cap") {
  auto c = gradcheck::tiny_config();
  c.history_cap = 2;
  ModelParams p(c);
  gradcheck::randomize(p, 7);
  auto full = fixed_instance();
  auto trimmed = full;
  trimmed.history.erase(trimmed.history.begin());
  CHECK(forward(p, c, full).y_main == forward(p, c, trimmed).y_main);
}

TEST_CASE("ablations keep parameter counts") {
  auto c = gradcheck::tiny_config();
  auto a = c;
  a.use_history = false;
  a.use_attention = false;
  CHECK(ModelParams(c).count() == ModelParams(a).count());
}

TEST_CASE("dropout only acts in train mode") {
  auto c = gradcheck::tiny_config();
  c.dropout = 0.5;
  ModelParams p(c);
  gradcheck::randomize(p, 1);
  const auto inst = fixed_instance();
  CHECK(forward(p, c, inst, false, 1).y_main == forward(p, c, inst, false, 2).y_main);
  CHECK(forward(p, c, inst, true, 1).y_main == forward(p, c, inst, true, 1).y_main);
  CHECK(forward(p, c, inst, true, 1).y_main != forward(p, c, inst, true, 2).y_main);
  Tape t;
  CHECK_THROWS(build_forward(t, p, c, inst, true, nullptr));
}

TEST_CASE("full model gradient check") {
  auto c = gradcheck::tiny_config();
  training::LossWeights w;
  w.lambda_main = 2.5;
  w.lambda_sp = 0.4;
  w.lambda_rt = 1.6;
  for (auto over : {AttentionOver::Conv, AttentionOver::Turn}) {
    auto cfg = c;
    cfg.attention_over = over;
    ModelParams p(cfg);
    gradcheck::randomize(p, 31);
    nn::GradCheckOptions opts;
    opts.seed = 5;
    const auto r = gradcheck::check_model(fixed_instance(), p, cfg, w, {true, true, true}, opts);
    CHECK(r.checked >= 200);
    CHECK(r.max_relative_error < 1e-4);
    CHECK(r.passed());
  }
}

TEST_CASE("short contexts are rejected") {
  auto c = gradcheck::tiny_config();
  ModelParams p(c);
  auto inst = fixed_instance();
  inst.context.resize(1);
  CHECK_THROWS(forward(p, c, inst));
}
