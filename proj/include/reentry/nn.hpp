#pragma once

// Dense tensors and a small reverse-mode tape covering exactly the operations
// the re-entry model needs. All arithmetic is double precision.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "reentry/random.hpp"

namespace reentry::nn {

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  void fill(double v);

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

struct Parameter {
  Parameter() = default;
  Parameter(std::string name, std::vector<std::size_t> shape)
      : name(std::move(name)), value(shape), grad(shape) {}

  std::string name;
  Tensor value;
  Tensor grad;

  void zero_grad() { grad.fill(0.0); }
  std::size_t size() const { return value.size(); }
};

// Handle to a node on a Tape.
struct Var {
  std::uint32_t id = 0;
};

// Records a computation over vectors and replays it backwards. Parameter
// gradients are accumulated directly into Parameter::grad.
class Tape {
 public:
  Tape();

  Var constant(std::vector<double> values);
  Var zeros(std::size_t n);
  // Whole parameter as a vector leaf.
  Var leaf(Parameter& p);
  // One row of a [rows, cols] parameter (embedding lookup).
  Var row(Parameter& table, std::size_t r);

  // w * x for w of shape [rows, cols].
  Var matvec(Parameter& w, Var x);
  // w * x + u * h + b, the pre-activation of a recurrent gate.
  Var affine2(Parameter& w, Var x, Parameter& u, Var h, Parameter& b);

  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double s);
  Var one_minus(Var a);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var concat(Var a, Var b);
  Var dot(Var a, Var b);
  Var softmax(Var a);
  // Gathers size-1 nodes into one vector.
  Var stack(std::span<const Var> scalars);
  // sum_j weights[j] * items[j].
  Var weighted_sum(Var weights, std::span<const Var> items);
  Var mean(std::span<const Var> items);
  Var sum(std::span<const Var> items);
  // Inverted dropout; identity when rate == 0.
  Var dropout(Var a, double rate, Rng& rng);

  // -[pos_weight * y * log(p) + neg_weight * (1 - y) * log(1 - p)], p clamped.
  Var weighted_bce(Var p, double y, double pos_weight, double neg_weight);
  // sum_j (y_j - p_j)^2 over size-1 nodes.
  Var squared_error(std::span<const Var> p, std::span<const double> y);

  const std::vector<double>& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value.at(0); }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = seed and propagates to all parameters reachable
  // from root. May be called once per tape.
  void backward(Var root, double seed = 1.0);

 private:
  enum class Op : std::uint8_t {
    Constant, Leaf, Row, MatVec, Affine2, Add, Mul, Scale, OneMinus, Sigmoid,
    Tanh, Concat, Dot, Softmax, Stack, WeightedSum, Sum, Dropout, Bce,
    SquaredError
  };

  struct Node {
    Op op = Op::Constant;
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    Parameter* p0 = nullptr;
    Parameter* p1 = nullptr;
    Parameter* p2 = nullptr;
    std::size_t index = 0;
    std::vector<std::uint32_t> inputs;
    std::vector<double> aux;
    std::vector<double> value;
  };

  Var push(Node node);
  const std::vector<double>& val(std::uint32_t id) const { return nodes_[id].value; }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// Numerically stable softmax over a plain vector.
std::vector<double> softmax(std::span<const double> scores);
double sigmoid(double x);

// ---------------------------------------------------------------------------
// Gated recurrent unit.

struct GruParams {
  GruParams() = default;
  GruParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim);

  Parameter w_z, w_r, w_h;  // [hidden, input]
  Parameter u_z, u_r, u_h;  // [hidden, hidden]
  Parameter b_z, b_r, b_h;  // [hidden]

  std::size_t input_dim() const { return w_z.value.cols(); }
  std::size_t hidden_dim() const { return w_z.value.rows(); }
  void collect(std::vector<Parameter*>& out);
};

// z = s(Wz x + Uz h + bz); r = s(Wr x + Ur h + br);
// c = tanh(Wh x + Uh (r*h) + bh); h' = (1 - z)*h + z*c.
Var gru_cell(Tape& tape, GruParams& params, Var x, Var h_prev);

struct BiGruParams {
  BiGruParams() = default;
  BiGruParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim);

  GruParams forward;
  GruParams backward;

  std::size_t hidden_dim() const { return forward.hidden_dim(); }
  void collect(std::vector<Parameter*>& out);
};

struct BiGruStates {
  // forward[j]: state after reading inputs[0..j]; backward[j]: state after
  // reading inputs[n-1..j].
  std::vector<Var> forward;
  std::vector<Var> backward;

  // [forward last ; backward first].
  Var summary(Tape& tape) const;
  // [forward[j] ; backward[j]].
  Var at(Tape& tape, std::size_t j) const;
};

BiGruStates run_bigru(Tape& tape, BiGruParams& params, std::span<const Var> inputs,
                      Var init_forward, Var init_backward);

// ---------------------------------------------------------------------------
// Finite-difference gradient checking.

struct GradCheckOptions {
  double eps = 1e-5;
  double tolerance = 1e-4;
  // Entries sampled per parameter; every entry when the parameter is smaller.
  std::size_t per_parameter = 16;
  // Lower bound on the total number of entries compared.
  std::size_t min_total = 200;
  // Denominator floor of the relative error, so gradients that are zero up to
  // round-off are compared absolutely.
  double denominator_floor = 1e-6;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string parameter;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  double max_relative_error = 0.0;
  std::vector<GradCheckEntry> violators;

  bool passed() const { return violators.empty() && checked > 0; }
};

// loss(compute_grad) must evaluate the scalar loss for the current parameter
// values and, when compute_grad is true, accumulate its gradient into the
// parameters' grad buffers. Gradients are zeroed before the analytic pass.
using LossFunction = std::function<double(bool compute_grad)>;

GradCheckReport grad_check(const LossFunction& loss, std::span<Parameter* const> params,
                           const GradCheckOptions& options = {});

}  // namespace reentry::nn
