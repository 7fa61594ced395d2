#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "reentry/corpus.hpp"
#include "reentry/eval.hpp"
#include "reentry/labeling.hpp"
#include "reentry/model.hpp"
#include "reentry/nn.hpp"

namespace reentry::training {

struct LossWeights {
  double lambda_main = 1.0;  // positive-class weight of the main loss
  double mu_main = 1.0;      // negative-class weight of the main loss
  double lambda_sp = 1.0;
  double lambda_rt = 1.0;
  double alpha_sp = 0.2;
  double alpha_rt = 0.2;
  double alpha_ta = 0.2;
};

// paper: lambda_task = #positive / #negative; inverse: #negative / #positive.
enum class AuxWeightMode { Paper, Inverse };

std::string to_string(AuxWeightMode m);
AuxWeightMode parse_aux_weight_mode(const std::string& s);

struct TrainConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 30;
  std::size_t patience = 5;
  double l2 = 1e-5;
  std::uint64_t seed = 1;
  labeling::TaskSet tasks;
  labeling::TaskSet invert;
  AuxWeightMode aux_weight_mode = AuxWeightMode::Paper;
  double weight_cap = 100.0;
  std::optional<double> lambda_main;  // default #neg / #pos
  std::optional<double> mu_main;      // default 1
  double alpha_sp = 0.2;
  double alpha_rt = 0.2;
  double alpha_ta = 0.2;
  double threshold = 0.5;
};

void validate(const TrainConfig& config);
nlohmann::json to_json(const TrainConfig& config);

// -[lambda * y * log(p) + mu * (1 - y) * log(1 - p)], p clamped to
// [1e-7, 1 - 1e-7].
double loss_main(double y_hat, int y, double lambda, double mu);
// Auxiliary BCE with unit negative weight.
double loss_aux(double y_hat, int y, double lambda_task);
// Plain sum of squared errors.
double loss_ta(std::span<const double> y_hat, std::span<const int> y);

struct TaskLosses {
  double main = 0.0;
  double sp = 0.0;
  double rt = 0.0;
  double ta = 0.0;
};

// L_main + alpha_sp L_SP + alpha_rt L_RT + alpha_ta L_TA over enabled tasks.
double loss_total(const TaskLosses& parts, const LossWeights& weights,
                  const labeling::TaskSet& enabled);

// numerator / denominator, or cap when the denominator is zero.
double ratio_weight(std::size_t numerator, std::size_t denominator, double cap);

LossWeights compute_loss_weights(std::span<const corpus::EncodedInstance> train,
                                 const TrainConfig& config);

// Tasks that contribute to the objective: enabled and with a positive alpha.
labeling::TaskSet active_tasks(const TrainConfig& config);

struct InstanceLoss {
  nn::Var total;
  std::optional<nn::Var> main, sp, rt, ta;
};

// Builds the per-instance objective on the tape. `include_main` exists for
// head-isolation checks.
InstanceLoss build_instance_loss(nn::Tape& tape, const model::ForwardGraph& graph,
                                 const corpus::EncodedInstance& instance,
                                 const LossWeights& weights, const labeling::TaskSet& tasks,
                                 bool include_main = true);

class Adam {
 public:
  Adam(std::vector<nn::Parameter*> params, double learning_rate, double l2 = 0.0,
       double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  // Adds l2 * w to each gradient, then applies a bias-corrected Adam update.
  void step();
  std::size_t steps() const { return t_; }

 private:
  std::vector<nn::Parameter*> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, l2_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

struct EpochLog {
  std::size_t epoch = 0;
  TaskLosses train_loss;  // mean per instance, unweighted
  double train_total = 0.0;
  eval::MetricReport valid;
  double wall_seconds = 0.0;
};

nlohmann::json to_json(const EpochLog& log);

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_f1 = -1.0;
  std::size_t steps = 0;
  bool early_stopped = false;
  LossWeights weights;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainCallbacks {
  std::function<void(const EpochLog&)> on_epoch;
  // Called whenever validation F1 improves, with the current parameters.
  std::function<void(const EpochLog&, const model::ModelParams&, std::size_t step)> on_best;
};

// Adam over bucketed mini-batches with early stopping on validation F1.
// Per-instance losses are summed and divided by the batch size. `params`
// ends holding the final (not best) weights.
TrainResult train(std::span<const corpus::EncodedInstance> train_set,
                  std::span<const corpus::EncodedInstance> valid_set, model::ModelParams& params,
                  const model::ModelConfig& model_config, const TrainConfig& config,
                  const TrainCallbacks& callbacks = {});

// Eval-mode main-task probabilities.
std::vector<double> predict(std::span<const corpus::EncodedInstance> instances,
                            model::ModelParams& params, const model::ModelConfig& config);

}  // namespace reentry::training
