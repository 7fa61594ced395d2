#include "reentry/nn.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace reentry::nn {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

constexpr double kProbFloor = 1e-7;

void require_same_size(const std::vector<double>& a, const std::vector<double>& b,
                       const char* op) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(op) + ": size mismatch (" +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()) + ")");
  }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != product(shape_)) {
    throw std::invalid_argument("Tensor: value count does not match shape");
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<double> softmax(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("softmax: empty input");
  const double hi = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - hi);
    total += out[i];
  }
  for (auto& x : out) x /= total;
  return out;
}

// ---------------------------------------------------------------------------

Tape::Tape() { nodes_.reserve(1024); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::constant(std::vector<double> values) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(values);
  return push(std::move(n));
}

Var Tape::zeros(std::size_t n) { return constant(std::vector<double>(n, 0.0)); }

Var Tape::leaf(Parameter& p) {
  Node n;
  n.op = Op::Leaf;
  n.p0 = &p;
  n.value.assign(p.value.values().begin(), p.value.values().end());
  return push(std::move(n));
}

Var Tape::row(Parameter& table, std::size_t r) {
  if (r >= table.value.rows()) throw std::out_of_range("Tape::row: index out of range");
  Node n;
  n.op = Op::Row;
  n.p0 = &table;
  n.index = r;
  const std::size_t cols = table.value.cols();
  const auto all = table.value.values();
  n.value.assign(all.begin() + r * cols, all.begin() + (r + 1) * cols);
  return push(std::move(n));
}

Var Tape::matvec(Parameter& w, Var x) {
  const auto& xv = val(x.id);
  const std::size_t rows = w.value.rows();
  const std::size_t cols = w.value.cols();
  if (xv.size() != cols) {
    throw std::invalid_argument("matvec: " + w.name + " expects input of size " +
                                std::to_string(cols) + ", got " + std::to_string(xv.size()));
  }
  Node n;
  n.op = Op::MatVec;
  n.p0 = &w;
  n.a = x.id;
  n.value.assign(rows, 0.0);
  const double* wp = w.value.values().data();
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = 0.0;
    const double* wr = wp + i * cols;
    for (std::size_t j = 0; j < cols; ++j) acc += wr[j] * xv[j];
    n.value[i] = acc;
  }
  return push(std::move(n));
}

Var Tape::affine2(Parameter& w, Var x, Parameter& u, Var h, Parameter& b) {
  const auto& xv = val(x.id);
  const auto& hv = val(h.id);
  const std::size_t rows = w.value.rows();
  if (xv.size() != w.value.cols() || hv.size() != u.value.cols() || u.value.rows() != rows ||
      b.value.size() != rows) {
    throw std::invalid_argument("affine2: shape mismatch for " + w.name);
  }
  Node n;
  n.op = Op::Affine2;
  n.p0 = &w;
  n.p1 = &u;
  n.p2 = &b;
  n.a = x.id;
  n.b = h.id;
  n.value.assign(rows, 0.0);
  const std::size_t xc = xv.size();
  const std::size_t hc = hv.size();
  const double* wp = w.value.values().data();
  const double* up = u.value.values().data();
  for (std::size_t i = 0; i < rows; ++i) {
    double acc = b.value[i];
    const double* wr = wp + i * xc;
    for (std::size_t j = 0; j < xc; ++j) acc += wr[j] * xv[j];
    const double* ur = up + i * hc;
    for (std::size_t j = 0; j < hc; ++j) acc += ur[j] * hv[j];
    n.value[i] = acc;
  }
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const auto& av = val(a.id);
  const auto& bv = val(b.id);
  require_same_size(av, bv, "add");
  Node n;
  n.op = Op::Add;
  n.a = a.id;
  n.b = b.id;
  n.value.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.value[i] = av[i] + bv[i];
  return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
  const auto& av = val(a.id);
  const auto& bv = val(b.id);
  require_same_size(av, bv, "mul");
  Node n;
  n.op = Op::Mul;
  n.a = a.id;
  n.b = b.id;
  n.value.resize(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) n.value[i] = av[i] * bv[i];
  return push(std::move(n));
}

Var Tape::scale(Var a, double s) {
  Node n;
  n.op = Op::Scale;
  n.a = a.id;
  n.c0 = s;
  n.value = val(a.id);
  for (auto& x : n.value) x *= s;
  return push(std::move(n));
}

Var Tape::one_minus(Var a) {
  Node n;
  n.op = Op::OneMinus;
  n.a = a.id;
  n.value = val(a.id);
  for (auto& x : n.value) x = 1.0 - x;
  return push(std::move(n));
}

Var Tape::sigmoid(Var a) {
  Node n;
  n.op = Op::Sigmoid;
  n.a = a.id;
  n.value = val(a.id);
  for (auto& x : n.value) x = nn::sigmoid(x);
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  Node n;
  n.op = Op::Tanh;
  n.a = a.id;
  n.value = val(a.id);
  for (auto& x : n.value) x = std::tanh(x);
  return push(std::move(n));
}

Var Tape::concat(Var a, Var b) {
  Node n;
  n.op = Op::Concat;
  n.a = a.id;
  n.b = b.id;
  const auto& av = val(a.id);
  const auto& bv = val(b.id);
  n.value.reserve(av.size() + bv.size());
  n.value.insert(n.value.end(), av.begin(), av.end());
  n.value.insert(n.value.end(), bv.begin(), bv.end());
  return push(std::move(n));
}

Var Tape::dot(Var a, Var b) {
  const auto& av = val(a.id);
  const auto& bv = val(b.id);
  require_same_size(av, bv, "dot");
  Node n;
  n.op = Op::Dot;
  n.a = a.id;
  n.b = b.id;
  n.value = {std::inner_product(av.begin(), av.end(), bv.begin(), 0.0)};
  return push(std::move(n));
}

Var Tape::softmax(Var a) {
  Node n;
  n.op = Op::Softmax;
  n.a = a.id;
  n.value = nn::softmax(val(a.id));
  return push(std::move(n));
}

Var Tape::stack(std::span<const Var> scalars) {
  Node n;
  n.op = Op::Stack;
  n.value.reserve(scalars.size());
  for (auto s : scalars) {
    if (val(s.id).size() != 1) throw std::invalid_argument("stack: inputs must be scalars");
    n.inputs.push_back(s.id);
    n.value.push_back(val(s.id)[0]);
  }
  return push(std::move(n));
}

Var Tape::weighted_sum(Var weights, std::span<const Var> items) {
  const auto& w = val(weights.id);
  if (items.empty() || w.size() != items.size()) {
    throw std::invalid_argument("weighted_sum: weight count must match item count");
  }
  Node n;
  n.op = Op::WeightedSum;
  n.a = weights.id;
  n.value.assign(val(items[0].id).size(), 0.0);
  for (std::size_t j = 0; j < items.size(); ++j) {
    const auto& x = val(items[j].id);
    require_same_size(n.value, x, "weighted_sum");
    for (std::size_t i = 0; i < x.size(); ++i) n.value[i] += w[j] * x[i];
    n.inputs.push_back(items[j].id);
  }
  return push(std::move(n));
}

Var Tape::sum(std::span<const Var> items) {
  if (items.empty()) throw std::invalid_argument("sum: no inputs");
  Node n;
  n.op = Op::Sum;
  n.value.assign(val(items[0].id).size(), 0.0);
  for (auto item : items) {
    const auto& x = val(item.id);
    require_same_size(n.value, x, "sum");
    for (std::size_t i = 0; i < x.size(); ++i) n.value[i] += x[i];
    n.inputs.push_back(item.id);
  }
  return push(std::move(n));
}

Var Tape::mean(std::span<const Var> items) {
  return scale(sum(items), 1.0 / static_cast<double>(items.size()));
}

Var Tape::dropout(Var a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be < 1");
  Node n;
  n.op = Op::Dropout;
  n.a = a.id;
  n.value = val(a.id);
  n.aux.resize(n.value.size());
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    n.aux[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    n.value[i] *= n.aux[i];
  }
  return push(std::move(n));
}

Var Tape::weighted_bce(Var p, double y, double pos_weight, double neg_weight) {
  const auto& pv = val(p.id);
  if (pv.size() != 1) throw std::invalid_argument("weighted_bce: prediction must be scalar");
  const double q = std::clamp(pv[0], kProbFloor, 1.0 - kProbFloor);
  Node n;
  n.op = Op::Bce;
  n.a = p.id;
  n.c0 = y;
  n.c1 = pos_weight;
  n.c2 = neg_weight;
  n.value = {-(pos_weight * y * std::log(q) + neg_weight * (1.0 - y) * std::log(1.0 - q))};
  return push(std::move(n));
}

Var Tape::squared_error(std::span<const Var> p, std::span<const double> y) {
  if (p.size() != y.size()) throw std::invalid_argument("squared_error: length mismatch");
  Node n;
  n.op = Op::SquaredError;
  n.aux.assign(y.begin(), y.end());
  double total = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const auto& pv = val(p[j].id);
    if (pv.size() != 1) throw std::invalid_argument("squared_error: predictions must be scalars");
    const double d = y[j] - pv[0];
    total += d * d;
    n.inputs.push_back(p[j].id);
  }
  n.value = {total};
  return push(std::move(n));
}

void Tape::backward(Var root, double seed) {
  if (backward_done_) throw std::logic_error("Tape::backward called twice");
  backward_done_ = true;

  std::vector<std::vector<double>> grads(nodes_.size());
  auto grad_of = [&](std::uint32_t id) -> std::vector<double>& {
    auto& g = grads[id];
    if (g.empty()) g.assign(nodes_[id].value.size(), 0.0);
    return g;
  };
  grad_of(root.id).assign(nodes_[root.id].value.size(), seed);

  for (std::int64_t id = root.id; id >= 0; --id) {
    auto& g = grads[id];
    if (g.empty()) continue;
    const Node& n = nodes_[id];
    const auto& y = n.value;
    switch (n.op) {
      case Op::Constant:
        break;
      case Op::Leaf: {
        auto pg = n.p0->grad.values();
        for (std::size_t i = 0; i < g.size(); ++i) pg[i] += g[i];
        break;
      }
      case Op::Row: {
        auto pg = n.p0->grad.values();
        const std::size_t off = n.index * g.size();
        for (std::size_t i = 0; i < g.size(); ++i) pg[off + i] += g[i];
        break;
      }
      case Op::MatVec: {
        const auto& x = val(n.a);
        auto& gx = grad_of(n.a);
        const std::size_t cols = x.size();
        const double* w = n.p0->value.values().data();
        double* gw = n.p0->grad.values().data();
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          for (std::size_t j = 0; j < cols; ++j) {
            gw[i * cols + j] += gi * x[j];
            gx[j] += w[i * cols + j] * gi;
          }
        }
        break;
      }
      case Op::Affine2: {
        const auto& x = val(n.a);
        const auto& h = val(n.b);
        auto& gx = grad_of(n.a);
        auto& gh = grad_of(n.b);
        const std::size_t xc = x.size();
        const std::size_t hc = h.size();
        const double* w = n.p0->value.values().data();
        double* gw = n.p0->grad.values().data();
        const double* u = n.p1->value.values().data();
        double* gu = n.p1->grad.values().data();
        double* gb = n.p2->grad.values().data();
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double gi = g[i];
          gb[i] += gi;
          if (gi == 0.0) continue;
          for (std::size_t j = 0; j < xc; ++j) {
            gw[i * xc + j] += gi * x[j];
            gx[j] += w[i * xc + j] * gi;
          }
          for (std::size_t j = 0; j < hc; ++j) {
            gu[i * hc + j] += gi * h[j];
            gh[j] += u[i * hc + j] * gi;
          }
        }
        break;
      }
      case Op::Add: {
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        auto& gb = grad_of(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        break;
      }
      case Op::Mul: {
        const auto& av = val(n.a);
        const auto& bv = val(n.b);
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        auto& gb = grad_of(n.b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        break;
      }
      case Op::Scale: {
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.c0;
        break;
      }
      case Op::OneMinus: {
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
        break;
      }
      case Op::Sigmoid: {
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      }
      case Op::Tanh: {
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
      }
      case Op::Concat: {
        const std::size_t na = val(n.a).size();
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
        auto& gb = grad_of(n.b);
        for (std::size_t i = na; i < g.size(); ++i) gb[i - na] += g[i];
        break;
      }
      case Op::Dot: {
        const auto& av = val(n.a);
        const auto& bv = val(n.b);
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < av.size(); ++i) ga[i] += g[0] * bv[i];
        auto& gb = grad_of(n.b);
        for (std::size_t i = 0; i < av.size(); ++i) gb[i] += g[0] * av[i];
        break;
      }
      case Op::Softmax: {
        double inner = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) inner += g[i] * y[i];
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += y[i] * (g[i] - inner);
        break;
      }
      case Op::Stack: {
        for (std::size_t j = 0; j < n.inputs.size(); ++j) grad_of(n.inputs[j])[0] += g[j];
        break;
      }
      case Op::WeightedSum: {
        const auto& w = val(n.a);
        auto& gw = grad_of(n.a);
        for (std::size_t j = 0; j < n.inputs.size(); ++j) {
          const auto& x = val(n.inputs[j]);
          auto& gx = grad_of(n.inputs[j]);
          double acc = 0.0;
          for (std::size_t i = 0; i < g.size(); ++i) {
            acc += g[i] * x[i];
            gx[i] += g[i] * w[j];
          }
          gw[j] += acc;
        }
        break;
      }
      case Op::Sum: {
        for (auto in : n.inputs) {
          auto& gx = grad_of(in);
          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
        }
        break;
      }
      case Op::Dropout: {
        auto& ga = grad_of(n.a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.aux[i];
        break;
      }
      case Op::Bce: {
        const double p = val(n.a)[0];
        // Zero gradient once the prediction is clamped.
        if (p < kProbFloor || p > 1.0 - kProbFloor) break;
        const double dp = -(n.c1 * n.c0 / p) + n.c2 * (1.0 - n.c0) / (1.0 - p);
        grad_of(n.a)[0] += g[0] * dp;
        break;
      }
      case Op::SquaredError: {
        for (std::size_t j = 0; j < n.inputs.size(); ++j) {
          const double p = val(n.inputs[j])[0];
          grad_of(n.inputs[j])[0] += g[0] * -2.0 * (n.aux[j] - p);
        }
        break;
      }
    }
    // Intermediate gradients are not needed again.
    std::vector<double>().swap(g);
  }
}

// ---------------------------------------------------------------------------

GruParams::GruParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim)
    : w_z(prefix + ".w_z", {hidden_dim, input_dim}),
      w_r(prefix + ".w_r", {hidden_dim, input_dim}),
      w_h(prefix + ".w_h", {hidden_dim, input_dim}),
      u_z(prefix + ".u_z", {hidden_dim, hidden_dim}),
      u_r(prefix + ".u_r", {hidden_dim, hidden_dim}),
      u_h(prefix + ".u_h", {hidden_dim, hidden_dim}),
      b_z(prefix + ".b_z", {hidden_dim}),
      b_r(prefix + ".b_r", {hidden_dim}),
      b_h(prefix + ".b_h", {hidden_dim}) {}

void GruParams::collect(std::vector<Parameter*>& out) {
  for (auto* p : {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h}) out.push_back(p);
}

Var gru_cell(Tape& tape, GruParams& params, Var x, Var h_prev) {
  if (tape.value(x).size() != params.input_dim() ||
      tape.value(h_prev).size() != params.hidden_dim()) {
    throw std::invalid_argument("gru_cell: shape mismatch for " + params.w_z.name);
  }
  const Var z = tape.sigmoid(tape.affine2(params.w_z, x, params.u_z, h_prev, params.b_z));
  const Var r = tape.sigmoid(tape.affine2(params.w_r, x, params.u_r, h_prev, params.b_r));
  const Var candidate =
      tape.tanh(tape.affine2(params.w_h, x, params.u_h, tape.mul(r, h_prev), params.b_h));
  return tape.add(tape.mul(tape.one_minus(z), h_prev), tape.mul(z, candidate));
}

BiGruParams::BiGruParams(const std::string& prefix, std::size_t input_dim,
                         std::size_t hidden_dim)
    : forward(prefix + ".fwd", input_dim, hidden_dim),
      backward(prefix + ".bwd", input_dim, hidden_dim) {}

void BiGruParams::collect(std::vector<Parameter*>& out) {
  forward.collect(out);
  backward.collect(out);
}

Var BiGruStates::summary(Tape& tape) const {
  return tape.concat(forward.back(), backward.front());
}

Var BiGruStates::at(Tape& tape, std::size_t j) const {
  return tape.concat(forward.at(j), backward.at(j));
}

BiGruStates run_bigru(Tape& tape, BiGruParams& params, std::span<const Var> inputs,
                      Var init_forward, Var init_backward) {
  if (inputs.empty()) throw std::invalid_argument("run_bigru: empty input sequence");
  BiGruStates states;
  const std::size_t n = inputs.size();
  states.forward.resize(n);
  states.backward.resize(n);
  Var h = init_forward;
  for (std::size_t j = 0; j < n; ++j) {
    h = gru_cell(tape, params.forward, inputs[j], h);
    states.forward[j] = h;
  }
  h = init_backward;
  for (std::size_t j = n; j-- > 0;) {
    h = gru_cell(tape, params.backward, inputs[j], h);
    states.backward[j] = h;
  }
  return states;
}

// ---------------------------------------------------------------------------

GradCheckReport grad_check(const LossFunction& loss, std::span<Parameter* const> params,
                           const GradCheckOptions& options) {
  if (options.eps < 1e-6 || options.eps > 1e-4) {
    throw std::invalid_argument("grad_check: eps must lie in [1e-6, 1e-4]");
  }
  for (auto* p : params) p->zero_grad();
  const double base = loss(true);
  if (!std::isfinite(base)) throw std::runtime_error("grad_check: non-finite loss");

  // Snapshot analytic gradients before the probes disturb anything.
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) {
    analytic.emplace_back(p->grad.values().begin(), p->grad.values().end());
  }

  Rng rng(options.seed);
  std::vector<std::set<std::size_t>> chosen(params.size());
  std::size_t total = 0;
  std::size_t available = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const std::size_t n = params[k]->size();
    available += n;
    if (n <= options.per_parameter) {
      for (std::size_t i = 0; i < n; ++i) chosen[k].insert(i);
    } else {
      while (chosen[k].size() < options.per_parameter) chosen[k].insert(rng.below(n));
    }
    total += chosen[k].size();
  }
  const std::size_t target = std::min(options.min_total, available);
  while (total < target) {
    const std::size_t k = rng.below(params.size());
    if (chosen[k].insert(rng.below(params[k]->size())).second) ++total;
  }

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto values = params[k]->value.values();
    for (auto i : chosen[k]) {
      const double original = values[i];
      values[i] = original + options.eps;
      const double plus = loss(false);
      values[i] = original - options.eps;
      const double minus = loss(false);
      values[i] = original;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        throw std::runtime_error("grad_check: non-finite loss while probing " +
                                 params[k]->name);
      }
      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double a = analytic[k][i];
      const double denom =
          std::max({std::abs(a), std::abs(numeric), options.denominator_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.checked;
      report.max_relative_error = std::max(report.max_relative_error, rel);
      if (!(rel <= options.tolerance)) {
        report.violators.push_back({params[k]->name, i, a, numeric, rel});
      }
    }
  }
  return report;
}

}  // namespace reentry::nn
