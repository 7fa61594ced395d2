#include <doctest.h>

#include <cmath>
#include <numeric>

#include "reentry/nn.hpp"

using namespace reentry;
using namespace reentry::nn;

namespace {

void fill_uniform(Parameter& p, Rng& rng, double a) {
  for (auto& v : p.value.values()) v = rng.uniform(-a, a);
}

std::vector<Parameter*> collect(GruParams& g) {
  std::vector<Parameter*> out;
  g.collect(out);
  return out;
}

}  // namespace

TEST_CASE("softmax basics") {
  const std::vector<double> zero{0.0, 0.0};
  const auto p = softmax(zero);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));

  const std::vector<double> big{1000.0, 0.0};
  const auto q = softmax(big);
  CHECK(std::isfinite(q[0]));
  CHECK(q[0] == doctest::Approx(1.0));
  CHECK(q[1] == doctest::Approx(0.0));
}

TEST_CASE("softmax is shift invariant and sums to one") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(1 + rng.below(8));
    for (auto& x : s) x = rng.uniform(-20, 20);
    auto shifted = s;
    const double c = rng.uniform(-500, 500);
    for (auto& x : shifted) x += c;
    const auto a = softmax(s);
    const auto b = softmax(shifted);
    CHECK(std::accumulate(a.begin(), a.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
  }
}

TEST_CASE("gru cell at zero parameters") {
  GruParams g("g", 3, 2);
  Tape t;
  const auto h = gru_cell(t, g, t.constant({0.4, -1.0, 2.0}), t.zeros(2));
  CHECK(t.value(h) == std::vector<double>{0.0, 0.0});
}

TEST_CASE("gru cell with a saturated update gate and closed reset gate") {
  GruParams g("g", 2, 2);
  Rng rng(1);
  fill_uniform(g.u_h, rng, 1.0);
  g.b_z.value.fill(50.0);
  g.b_r.value.fill(-50.0);
  Tape t;
  const auto h = gru_cell(t, g, t.zeros(2), t.constant({0.7, -0.3}));
  // z = 1 takes the candidate; r = 0 hides h_prev, so the candidate is tanh(b_h) = 0.
  for (double v : t.value(h)) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("gru with zero weights halves a nonzero initial state per step") {
  BiGruParams bi("bi", 2, 3);
  Tape t;
  std::vector<Var> xs;
  for (int k = 0; k < 4; ++k) xs.push_back(t.constant({0.3 * k, -0.1}));
  const auto init = t.constant({0.8, -0.4, 0.2});
  const auto s = run_bigru(t, bi, xs, init, init);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double f = std::pow(0.5, static_cast<double>(k + 1));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(t.value(s.forward[k])[i] == doctest::Approx(f * t.value(init)[i]));
    }
  }
}

TEST_CASE("reversing the input swaps directions when weights are tied") {
  Rng rng(8);
  BiGruParams bi("bi", 2, 3);
  for (auto* p : collect(bi.forward)) fill_uniform(*p, rng, 0.7);
  bi.backward = bi.forward;
  Tape t;
  std::vector<Var> xs, rev;
  for (int k = 0; k < 4; ++k) xs.push_back(t.constant({rng.uniform(-1, 1), rng.uniform(-1, 1)}));
  rev.assign(xs.rbegin(), xs.rend());
  const auto z = t.zeros(3);
  const auto a = run_bigru(t, bi, xs, z, z);
  const auto b = run_bigru(t, bi, rev, z, z);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const auto& fa = t.value(a.forward[j]);
    const auto& bb = t.value(b.backward[xs.size() - 1 - j]);
    for (std::size_t i = 0; i < 3; ++i) CHECK(fa[i] == doctest::Approx(bb[i]).epsilon(1e-14));
  }
}

TEST_CASE("gradient check of a linear layer with squared error") {
  Parameter w("w", {2, 3});
  Parameter b("b", {2});
  Rng rng(2);
  fill_uniform(w, rng, 1.0);
  fill_uniform(b, rng, 1.0);
  const std::vector<double> x{0.5, -1.5, 2.0};
  auto loss = [&](bool grad) {
    Tape t;
    const auto y = t.add(t.matvec(w, t.constant(x)), t.leaf(b));
    const Var e = t.add(y, t.constant({-0.3, 0.8}));
    const Var l = t.dot(e, e);
    if (grad) t.backward(l);
    return t.scalar(l);
  };
  std::vector<Parameter*> ps{&w, &b};
  GradCheckOptions opts;
  opts.min_total = 1;
  const auto r = grad_check(loss, ps, opts);
  CHECK(r.checked == 8);
  CHECK(r.max_relative_error < 1e-7);
  CHECK(r.passed());
}

TEST_CASE("every tape operation passes a gradient check") {
  Rng rng(6);
  Parameter a("a", {3}), b("b", {3}), w("w", {3, 3}), u("u", {3, 3}), c("c", {3}),
      table("table", {4, 3});
  for (auto* p : {&a, &b, &w, &u, &c, &table}) fill_uniform(*p, rng, 0.9);
  std::vector<Parameter*> ps{&a, &b, &w, &u, &c, &table};

  auto loss = [&](bool grad) {
    Tape t;
    Rng drop(17);
    const Var va = t.leaf(a), vb = t.leaf(b);
    const Var g = t.affine2(w, va, u, vb, c);
    const Var s = t.sigmoid(g);
    const Var th = t.tanh(t.mul(va, vb));
    const Var mix = t.add(t.mul(s, th), t.one_minus(t.scale(vb, 0.5)));
    const Var sm = t.softmax(mix);
    const Var r = t.row(table, 2);
    const std::vector<Var> items{mix, r, th};
    const Var ws = t.weighted_sum(sm, items);
    const Var cat = t.concat(ws, t.dropout(r, 0.3, drop));
    const Var d = t.dot(cat, cat);
    const std::vector<Var> scalars{t.dot(va, vb), t.dot(r, s)};
    const Var st = t.stack(scalars);
    const Var p1 = t.sigmoid(t.dot(st, t.constant({0.7, -0.4})));
    const Var p2 = t.sigmoid(t.dot(ws, vb));
    const Var bce = t.weighted_bce(p1, 1.0, 1.7, 0.6);
    const std::vector<Var> ps2{p1, p2};
    const std::vector<double> ys{0.0, 1.0};
    const Var se = t.squared_error(ps2, ys);
    const std::vector<Var> terms{d, bce, se, t.weighted_bce(p2, 0.0, 0.4, 2.2)};
    const Var total = t.add(t.sum(terms), t.scale(t.mean(terms), 0.5));
    if (grad) t.backward(total);
    return t.scalar(total);
  };
  GradCheckOptions opts;
  opts.min_total = 1;
  const auto r = grad_check(loss, ps, opts);
  CHECK(r.checked == 3 + 3 + 9 + 9 + 3 + 12);
  CHECK(r.max_relative_error < 1e-6);
}

TEST_CASE("gru cell gradients") {
  Rng rng(3);
  GruParams g("g", 3, 4);
  auto ps = collect(g);
  for (auto* p : ps) fill_uniform(*p, rng, 0.8);
  auto loss = [&](bool grad) {
    Tape t;
    const Var h1 = gru_cell(t, g, t.constant({0.3, -0.7, 0.5}), t.constant({0.1, -0.2, 0.4, 0.05}));
    const Var h2 = gru_cell(t, g, t.constant({-0.6, 0.2, 0.9}), h1);
    const Var l = t.dot(h2, t.constant({1.0, -2.0, 0.5, 1.5}));
    if (grad) t.backward(l);
    return t.scalar(l);
  };
  GradCheckOptions opts;
  opts.min_total = 1;
  const auto r = grad_check(loss, ps, opts);
  CHECK(r.passed());
  CHECK(r.max_relative_error < 1e-6);
}

TEST_CASE("a corrupted gradient is reported") {
  Parameter w("w", {4});
  Rng rng(1);
  fill_uniform(w, rng, 1.0);
  auto loss = [&](bool grad) {
    Tape t;
    const Var v = t.leaf(w);
    const Var l = t.dot(v, v);
    if (grad) {
      t.backward(l);
      w.grad[2] += 0.5;
    }
    return t.scalar(l);
  };
  std::vector<Parameter*> ps{&w};
  GradCheckOptions opts;
  opts.min_total = 1;
  const auto r = grad_check(loss, ps, opts);
  CHECK_FALSE(r.passed());
  REQUIRE(r.violators.size() == 1);
  CHECK(r.violators[0].index == 2);
  CHECK(r.violators[0].parameter == "w");
}

TEST_CASE("grad_check argument validation") {
  Parameter w("w", {1});
  std::vector<Parameter*> ps{&w};
  auto ok = [&](bool) { return 0.0; };
  GradCheckOptions opts;
  opts.eps = 1e-3;
  CHECK_THROWS(grad_check(ok, ps, opts));
  auto bad = [&](bool) { return std::nan(""); };
  CHECK_THROWS(grad_check(bad, ps));
}

TEST_CASE("weighted bce values and clamping") {
  Tape t;
  const Var half = t.constant({0.5});
  CHECK(t.scalar(t.weighted_bce(half, 1.0, 1.0, 1.0)) == doctest::Approx(0.693147).epsilon(1e-5));
  CHECK(t.scalar(t.weighted_bce(half, 0.0, 1.0, 2.0)) == doctest::Approx(1.386294).epsilon(1e-5));
  CHECK(t.scalar(t.weighted_bce(t.constant({1.0}), 0.0, 1.0, 1.0)) ==
        doctest::Approx(-std::log(1e-7)));
  CHECK(std::isfinite(t.scalar(t.weighted_bce(t.constant({0.0}), 1.0, 1.0, 1.0))));
}

TEST_CASE("backward may run once per tape") {
  Parameter w("w", {2});
  Tape t;
  const Var l = t.dot(t.leaf(w), t.leaf(w));
  t.backward(l);
  CHECK_THROWS(t.backward(l));
}

TEST_CASE("dropout is the identity at rate zero and rescales kept units") {
  Tape t;
  Rng rng(9);
  const Var x = t.constant(std::vector<double>(1000, 1.0));
  CHECK(t.value(t.dropout(x, 0.0, rng)) == t.value(x));
  const auto& d = t.value(t.dropout(x, 0.25, rng));
  std::size_t kept = 0;
  for (double v : d) {
    CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.75)));
    kept += v != 0.0;
  }
  CHECK(kept > 650);
  CHECK(kept < 850);
}
