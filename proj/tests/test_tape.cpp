#include "myodyn/tape.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"

namespace {

using myodyn::Dual2;
using myodyn::Tape;
using myodyn::Var;

TEST(Tape, PolynomialDerivative) {
  Tape tape;
  Var x = tape.leaf(3.0);
  Var y = sq(x);
  tape.backward(y);
  EXPECT_DOUBLE_EQ(tape.grad(x), 6.0);
}

TEST(Tape, LinearFormGradientIsCoefficient) {
  Tape tape;
  std::vector<Var> w, x;
  const std::vector<double> xv = {1.5, -2.0, 0.25};
  Var loss = tape.constant(0.0);
  for (double v : xv) {
    w.push_back(tape.leaf(0.7));
    x.push_back(tape.leaf(v));
    loss = loss + w.back() * x.back();
  }
  tape.backward(loss);
  for (size_t i = 0; i < w.size(); ++i) EXPECT_DOUBLE_EQ(tape.grad(w[i]), xv[i]);
}

TEST(Tape, UnreachableLeafHasZeroGradient) {
  Tape tape;
  Var x = tape.leaf(2.0);
  Var dead = tape.leaf(5.0);
  Var y = exp(x);
  tape.backward(y);
  EXPECT_DOUBLE_EQ(tape.grad(dead), 0.0);
}

TEST(Tape, BackwardIsLinearInLoss) {
  auto build = [](Tape& t, Var x, Var y) {
    Var f = sin(x) * y + sq(y) / (x + 3.0);
    Var g = exp(x * y) - cos(y);
    return std::pair{f, g};
  };
  const double a = 1.7, b = -0.6;
  Tape t1;
  Var x1 = t1.leaf(0.8), y1 = t1.leaf(-0.4);
  auto [f1, g1] = build(t1, x1, y1);
  Var combined = a * f1 + b * g1;
  t1.backward(combined);
  const double gx_combined = t1.grad(x1), gy_combined = t1.grad(y1);

  Tape t2;
  Var x2 = t2.leaf(0.8), y2 = t2.leaf(-0.4);
  auto [f2, g2] = build(t2, x2, y2);
  t2.backward(f2);
  const double gx_f = t2.grad(x2), gy_f = t2.grad(y2);
  Tape t3;
  Var x3 = t3.leaf(0.8), y3 = t3.leaf(-0.4);
  auto [f3, g3] = build(t3, x3, y3);
  t3.backward(g3);
  EXPECT_NEAR(gx_combined, a * gx_f + b * t3.grad(x3), 1e-12);
  EXPECT_NEAR(gy_combined, a * gy_f + b * t3.grad(y3), 1e-12);
}

// Gradient of a three-layer scalar composition against central differences.
TEST(Tape, RandomCompositionMatchesFiniteDifferences) {
  auto f = [](Tape& tape, const std::vector<Var>& p) {
    Var h1 = tanh(p[0] * 1.3 + p[1] * -0.7 + 0.2);
    Var h2 = myodyn::logistic(p[1] * 0.9 - p[2] * 1.1);
    Var h3 = exp(h1 * h2 * 0.5) + sq(p[0] - h2);
    return sqrt(h3 + 1.5) * sin(h1 + 2.0 * h2) + h3 / (p[2] + 2.0);
  };
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> point(3);
    for (auto& v : point)
      v = ((rng() >> 11) * 0x1.0p-53) * 2.0 - 1.0;
    auto report = myodyn::grad_check(f, point, 1e-5, 1e-5);
    EXPECT_TRUE(report.passed()) << "max rel err " << report.max_rel_err;
  }
}

TEST(Tape, DotMatchesElementwiseOps) {
  const std::vector<double> wv = {0.3, -1.2, 0.8, 2.0};
  const std::vector<double> xv = {1.0, 0.5, -0.25, 0.1};

  Tape t1;
  std::vector<Var> w1, x1;
  for (double v : wv) w1.push_back(t1.leaf(v));
  for (double v : xv) x1.push_back(t1.leaf(Dual2{v, 0.5 * v, -v}));
  Var bias1 = t1.leaf(0.7);
  Var y1 = t1.dot(w1.front().idx, x1.front().idx, 4, bias1.idx);
  Var l1 = sq(y1);
  t1.backward(l1);

  Tape t2;
  std::vector<Var> w2, x2;
  for (double v : wv) w2.push_back(t2.leaf(v));
  for (double v : xv) x2.push_back(t2.leaf(Dual2{v, 0.5 * v, -v}));
  Var acc = t2.leaf(0.7);
  for (size_t i = 0; i < 4; ++i) acc = acc + w2[i] * x2[i];
  Var l2 = sq(acc);
  t2.backward(l2);

  const Dual2 v1 = myodyn::value(y1), v2 = myodyn::value(acc);
  EXPECT_DOUBLE_EQ(v1.v, v2.v);
  EXPECT_DOUBLE_EQ(v1.d1, v2.d1);
  EXPECT_DOUBLE_EQ(v1.d2, v2.d2);
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(t1.grad(w1[i]), t2.grad(w2[i]));
    EXPECT_DOUBLE_EQ(t1.grad(x1[i]), t2.grad(x2[i]));
  }
}

TEST(Tape, TangentsMatchPlainDual2) {
  auto lift = [](Dual2 t) { return exp(sin(2.0 * t)) * tanh(t) + sq(t) / (t + 3.0); };
  const double t0 = 0.45;
  Tape tape;
  Var t = tape.leaf(Dual2::seed(t0));
  Var y = exp(sin(2.0 * t)) * tanh(t) + sq(t) / (t + 3.0);
  const Dual2 expect = lift(Dual2::seed(t0));
  const Dual2 got = myodyn::value(y);
  EXPECT_DOUBLE_EQ(got.v, expect.v);
  EXPECT_DOUBLE_EQ(got.d1, expect.d1);
  EXPECT_DOUBLE_EQ(got.d2, expect.d2);
}

// The load-bearing property for physics-informed training: gradients with
// respect to a parameter of expressions built from the value, first and
// second time-tangent of a network-like composition.
TEST(Tape, MixedSecondOrderGradients) {
  const double t0 = 0.37;
  auto taylor = [&](double w) {
    Dual2 t = Dual2::seed(t0);
    Dual2 h = tanh(w * t + 0.2) * myodyn::logistic(t * -1.1 + w);
    return exp(h) + w * sq(t);  // value, d/dt, d2/dt2 all depend on w
  };
  auto build = [&](Tape& tape, Var w) {
    Var t = tape.leaf(Dual2::seed(t0));
    Var h = tanh(w * t + 0.2) * myodyn::logistic(t * -1.1 + w);
    return exp(h) + w * sq(t);
  };

  const double w0 = 0.83, h = 1e-6;
  const Dual2 up = taylor(w0 + h), dn = taylor(w0 - h);
  const double dv_dw = (up.v - dn.v) / (2 * h);
  const double dd1_dw = (up.d1 - dn.d1) / (2 * h);
  const double dd2_dw = (up.d2 - dn.d2) / (2 * h);

  // Linear combination of the three component taps.
  {
    const double alpha = 1.3, beta = -0.7, gamma = 0.4;
    Tape tape;
    Var w = tape.leaf(w0);
    Var y = build(tape, w);
    Var loss = alpha * comp_d2(y) + beta * comp_d1(y) + gamma * comp_value(y);
    tape.backward(loss);
    EXPECT_NEAR(tape.grad(w), alpha * dd2_dw + beta * dd1_dw + gamma * dv_dw,
                1e-6 * (1.0 + std::abs(tape.grad(w))));
  }

  // Nonlinear use, as in a squared dynamics residual.
  {
    Tape tape;
    Var w = tape.leaf(w0);
    Var y = build(tape, w);
    Var rho = comp_d2(y) * 0.01 + comp_d1(y) * 0.05 + sin(comp_value(y)) - 0.3;
    Var loss = sq(rho);
    tape.backward(loss);

    auto loss_at = [&](double wv) {
      const Dual2 d = taylor(wv);
      const double r = d.d2 * 0.01 + d.d1 * 0.05 + std::sin(d.v) - 0.3;
      return r * r;
    };
    const double fd = (loss_at(w0 + h) - loss_at(w0 - h)) / (2 * h);
    EXPECT_NEAR(tape.grad(w), fd, 1e-6 * (1.0 + std::abs(fd)));
  }
}

TEST(Tape, GradCheckQuadraticBowl) {
  auto f = [](Tape& tape, const std::vector<Var>& p) {
    Var acc = tape.constant(0.0);
    for (Var v : p) acc = acc + sq(v);
    return acc;
  };
  auto report = myodyn::grad_check(f, {0.3, -0.8, 1.1}, 1e-5, 1e-6);
  EXPECT_TRUE(report.passed());
  auto strict = myodyn::grad_check(f, {0.3, -0.8, 1.1}, 1e-5, 1e-14);
  EXPECT_FALSE(strict.passed()) << "finite differences cannot hit 1e-14";
}

TEST(Tape, RewindReusesStorage) {
  Tape tape;
  Var w = tape.leaf(2.0);
  const size_t mark = tape.size();
  for (int i = 0; i < 3; ++i) {
    tape.rewind(mark);
    tape.set(w, 2.0 + i);
    Var y = sq(w) * 3.0;
    tape.backward(y);
    EXPECT_DOUBLE_EQ(tape.grad(w), 6.0 * (2.0 + i));
  }
}

}  // namespace
