#include "reentry/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace reentry::training {

namespace {

constexpr double kProbFloor = 1e-7;

double clamp_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

// Shuffle, group by context length, cut batches inside each group, shuffle
// the batch order.
std::vector<std::vector<std::size_t>> make_batches(
    std::span<const corpus::EncodedInstance> data, std::size_t batch_size, Rng& rng) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  rng.shuffle(idx);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return data[a].context.size() < data[b].context.size();
  });
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < idx.size();) {
    const std::size_t len = data[idx[i]].context.size();
    std::vector<std::size_t> batch;
    while (i < idx.size() && batch.size() < batch_size && data[idx[i]].context.size() == len) {
      batch.push_back(idx[i++]);
    }
    batches.push_back(std::move(batch));
  }
  rng.shuffle(batches);
  return batches;
}

}  // namespace

std::string to_string(AuxWeightMode m) { return m == AuxWeightMode::Paper ? "paper" : "inverse"; }

AuxWeightMode parse_aux_weight_mode(const std::string& s) {
  if (s == "paper") return AuxWeightMode::Paper;
  if (s == "inverse") return AuxWeightMode::Inverse;
  throw std::invalid_argument("aux weight mode must be 'paper' or 'inverse', got '" + s + "'");
}

void validate(const TrainConfig& c) {
  if (!(c.learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
  if (c.batch_size == 0) throw std::invalid_argument("train: batch size must be positive");
  if (c.max_epochs == 0) throw std::invalid_argument("train: max_epochs must be positive");
  if (c.l2 < 0.0 || c.alpha_sp < 0.0 || c.alpha_rt < 0.0 || c.alpha_ta < 0.0 ||
      c.weight_cap <= 0.0) {
    throw std::invalid_argument("train: weights and penalties must be non-negative");
  }
  if ((c.lambda_main && *c.lambda_main < 0.0) || (c.mu_main && *c.mu_main < 0.0)) {
    throw std::invalid_argument("train: lambda/mu must be non-negative");
  }
}

nlohmann::json to_json(const TrainConfig& c) {
  nlohmann::json j = {{"learning_rate", c.learning_rate},
                      {"batch_size", c.batch_size},
                      {"max_epochs", c.max_epochs},
                      {"patience", c.patience},
                      {"l2", c.l2},
                      {"seed", c.seed},
                      {"tasks", labeling::format_tasks(c.tasks)},
                      {"invert", labeling::format_tasks(c.invert)},
                      {"aux_weight_mode", to_string(c.aux_weight_mode)},
                      {"weight_cap", c.weight_cap},
                      {"alpha_sp", c.alpha_sp},
                      {"alpha_rt", c.alpha_rt},
                      {"alpha_ta", c.alpha_ta},
                      {"threshold", c.threshold}};
  j["lambda_main"] = c.lambda_main ? nlohmann::json(*c.lambda_main) : nlohmann::json(nullptr);
  j["mu_main"] = c.mu_main ? nlohmann::json(*c.mu_main) : nlohmann::json(nullptr);
  return j;
}

double loss_main(double y_hat, int y, double lambda, double mu) {
  const double p = clamp_prob(y_hat);
  return -(lambda * y * std::log(p) + mu * (1 - y) * std::log(1.0 - p));
}

double loss_aux(double y_hat, int y, double lambda_task) {
  return loss_main(y_hat, y, lambda_task, 1.0);
}

double loss_ta(std::span<const double> y_hat, std::span<const int> y) {
  if (y_hat.size() != y.size()) throw std::invalid_argument("loss_ta: length mismatch");
  double total = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    const double d = y[j] - y_hat[j];
    total += d * d;
  }
  return total;
}

double loss_total(const TaskLosses& parts, const LossWeights& w, const labeling::TaskSet& enabled) {
  double total = parts.main;
  if (enabled.sp) total += w.alpha_sp * parts.sp;
  if (enabled.rt) total += w.alpha_rt * parts.rt;
  if (enabled.ta) total += w.alpha_ta * parts.ta;
  return total;
}

double ratio_weight(std::size_t numerator, std::size_t denominator, double cap) {
  if (denominator == 0) return cap;
  return std::min(cap, static_cast<double>(numerator) / static_cast<double>(denominator));
}

LossWeights compute_loss_weights(std::span<const corpus::EncodedInstance> train,
                                 const TrainConfig& config) {
  std::size_t main_pos = 0, sp_pos = 0, rt_pos = 0;
  for (const auto& inst : train) {
    main_pos += inst.y_main == 1;
    sp_pos += inst.y_sp == 1;
    rt_pos += inst.y_rt == 1;
  }
  const std::size_t n = train.size();
  LossWeights w;
  w.lambda_main = config.lambda_main.value_or(ratio_weight(n - main_pos, main_pos, config.weight_cap));
  w.mu_main = config.mu_main.value_or(1.0);
  auto aux = [&](std::size_t pos) {
    return config.aux_weight_mode == AuxWeightMode::Paper
               ? ratio_weight(pos, n - pos, config.weight_cap)
               : ratio_weight(n - pos, pos, config.weight_cap);
  };
  w.lambda_sp = aux(sp_pos);
  w.lambda_rt = aux(rt_pos);
  w.alpha_sp = config.alpha_sp;
  w.alpha_rt = config.alpha_rt;
  w.alpha_ta = config.alpha_ta;
  return w;
}

labeling::TaskSet active_tasks(const TrainConfig& config) {
  return {config.tasks.sp && config.alpha_sp > 0.0, config.tasks.rt && config.alpha_rt > 0.0,
          config.tasks.ta && config.alpha_ta > 0.0};
}

InstanceLoss build_instance_loss(nn::Tape& tape, const model::ForwardGraph& graph,
                                 const corpus::EncodedInstance& instance, const LossWeights& w,
                                 const labeling::TaskSet& tasks, bool include_main) {
  InstanceLoss out;
  std::vector<nn::Var> terms;
  if (include_main) {
    out.main = tape.weighted_bce(graph.y_main, instance.y_main, w.lambda_main, w.mu_main);
    terms.push_back(*out.main);
  }
  if (tasks.sp) {
    out.sp = tape.weighted_bce(graph.y_sp, instance.y_sp, w.lambda_sp, 1.0);
    terms.push_back(tape.scale(*out.sp, w.alpha_sp));
  }
  if (tasks.rt) {
    out.rt = tape.weighted_bce(graph.y_rt, instance.y_rt, w.lambda_rt, 1.0);
    terms.push_back(tape.scale(*out.rt, w.alpha_rt));
  }
  if (tasks.ta) {
    if (instance.y_ta.size() != graph.y_ta.size()) {
      throw std::invalid_argument("loss_ta: label length does not match context");
    }
    std::vector<double> y(instance.y_ta.begin(), instance.y_ta.end());
    out.ta = tape.squared_error(graph.y_ta, y);
    terms.push_back(tape.scale(*out.ta, w.alpha_ta));
  }
  if (terms.empty()) throw std::invalid_argument("build_instance_loss: no loss terms");
  out.total = terms.size() == 1 ? terms[0] : tape.sum(terms);
  return out;
}

// ---------------------------------------------------------------------------

Adam::Adam(std::vector<nn::Parameter*> params, double learning_rate, double l2, double beta1,
           double beta2, double eps)
    : params_(std::move(params)), lr_(learning_rate), l2_(l2), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  for (auto* p : params_) {
    m_.emplace_back(p->size(), 0.0);
    v_.emplace_back(p->size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto w = params_[k]->value.values();
    auto g = params_[k]->grad.values();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] + l2_ * w[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      w[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

nlohmann::json to_json(const EpochLog& log) {
  return {{"epoch", log.epoch},
          {"train_loss",
           {{"main", log.train_loss.main},
            {"sp", log.train_loss.sp},
            {"rt", log.train_loss.rt},
            {"ta", log.train_loss.ta},
            {"total", log.train_total}}},
          {"valid", eval::to_json(log.valid)},
          {"wall_seconds", log.wall_seconds}};
}

std::vector<double> predict(std::span<const corpus::EncodedInstance> instances,
                            model::ModelParams& params, const model::ModelConfig& config) {
  std::vector<double> scores;
  scores.reserve(instances.size());
  for (const auto& inst : instances) {
    nn::Tape tape;
    const auto g = model::build_forward(tape, params, config, inst, false);
    scores.push_back(tape.scalar(g.y_main));
  }
  return scores;
}

TrainResult train(std::span<const corpus::EncodedInstance> train_set,
                  std::span<const corpus::EncodedInstance> valid_set, model::ModelParams& params,
                  const model::ModelConfig& model_config, const TrainConfig& config,
                  const TrainCallbacks& callbacks) {
  validate(config);
  if (train_set.empty() || valid_set.empty()) {
    throw std::invalid_argument("train: training and validation sets must be non-empty");
  }
  TrainResult result;
  result.weights = compute_loss_weights(train_set, config);
  const auto tasks = active_tasks(config);
  Adam optimizer(params.all(), config.learning_rate, config.l2);

  std::vector<int> valid_labels;
  for (const auto& inst : valid_set) valid_labels.push_back(inst.y_main);

  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const std::uint64_t epoch_seed = mix_seed(config.seed, epoch);
    Rng batch_rng(epoch_seed);
    const auto batches = make_batches(train_set, config.batch_size, batch_rng);

    TaskLosses sums;
    double total_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      params.zero_grad();
      const double scale = 1.0 / static_cast<double>(batch.size());
      for (auto idx : batch) {
        const auto& inst = train_set[idx];
        nn::Tape tape;
        Rng dropout_rng(mix_seed(epoch_seed, idx));
        const auto graph = model::build_forward(tape, params, model_config, inst, true, &dropout_rng);
        const auto loss = build_instance_loss(tape, graph, inst, result.weights, tasks);
        const double total = tape.scalar(loss.total);
        if (!std::isfinite(total)) {
          throw TrainingDiverged("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " + std::to_string(b + 1) +
                                 ", instance " + std::to_string(idx));
        }
        total_sum += total;
        sums.main += tape.scalar(*loss.main);
        if (loss.sp) sums.sp += tape.scalar(*loss.sp);
        if (loss.rt) sums.rt += tape.scalar(*loss.rt);
        if (loss.ta) sums.ta += tape.scalar(*loss.ta);
        tape.backward(loss.total, scale);
      }
      optimizer.step();
    }

    EpochLog log;
    log.epoch = epoch;
    const double n = static_cast<double>(train_set.size());
    log.train_loss = {sums.main / n, sums.sp / n, sums.rt / n, sums.ta / n};
    log.train_total = total_sum / n;
    const auto scores = predict(valid_set, params, model_config);
    log.valid = eval::evaluate(scores, valid_labels, config.threshold);
    log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.log.push_back(log);
    if (callbacks.on_epoch) callbacks.on_epoch(log);

    if (log.valid.f1 > result.best_f1) {
      result.best_f1 = log.valid.f1;
      result.best_epoch = epoch;
      since_best = 0;
      if (callbacks.on_best) callbacks.on_best(log, params, optimizer.steps());
    } else if (++since_best >= config.patience) {
      result.early_stopped = true;
      break;
    }
  }
  result.steps = optimizer.steps();
  return result;
}

}  // namespace reentry::training
