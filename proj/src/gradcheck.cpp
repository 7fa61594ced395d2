#include "reentry/gradcheck.hpp"

namespace reentry::gradcheck {

model::ModelConfig tiny_config() {
  model::ModelConfig c;
  c.vocab_size = 12;
  c.embed_dim = 4;
  c.hidden_dim = 3;
  c.dropout = 0.0;
  c.history_cap = 3;
  return c;
}

corpus::EncodedInstance random_instance(Rng& rng, std::size_t vocab_size) {
  const std::size_t m = 2 + rng.below(3);
  std::vector<corpus::Turn> context(m);
  for (auto& t : context) t.author = "u" + std::to_string(rng.below(3));
  const auto target = context.back().author;

  corpus::EncodedInstance inst;
  auto random_turn = [&] {
    std::vector<std::int32_t> ids(1 + rng.below(4));
    for (auto& id : ids) id = static_cast<std::int32_t>(2 + rng.below(vocab_size - 2));
    return ids;
  };
  for (std::size_t j = 0; j < m; ++j) inst.context.push_back(random_turn());
  const std::size_t h = rng.below(4);
  for (std::size_t j = 0; j < h; ++j) inst.history.push_back(random_turn());
  inst.y_main = static_cast<int>(rng.below(2));
  inst.y_sp = labeling::sp_label(context);
  inst.y_rt = labeling::rt_label(context, target);
  inst.y_ta = labeling::ta_labels(context, target);
  return inst;
}

void randomize(model::ModelParams& params, std::uint64_t seed) {
  Rng rng(seed);
  for (auto* p : params.all())
    for (auto& v : p->value.values()) v = rng.uniform(-0.5, 0.5);
}

nn::GradCheckReport check_model(const corpus::EncodedInstance& instance,
                                model::ModelParams& params, const model::ModelConfig& config,
                                const training::LossWeights& weights,
                                const labeling::TaskSet& tasks,
                                const nn::GradCheckOptions& options) {
  auto loss = [&](bool with_grad) {
    nn::Tape tape;
    const auto graph = model::build_forward(tape, params, config, instance, false);
    const auto l = training::build_instance_loss(tape, graph, instance, weights, tasks);
    const double value = tape.scalar(l.total);
    if (with_grad) tape.backward(l.total);
    return value;
  };
  auto all = params.all();
  return nn::grad_check(loss, all, options);
}

}  // namespace reentry::gradcheck
