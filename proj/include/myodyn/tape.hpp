#pragma once

#include <cassert>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "myodyn/dual2.hpp"

namespace myodyn {

using std::exp;
using std::log;
using std::sin;
using std::cos;
using std::tanh;
using std::sqrt;
using std::asin;
using std::atan2;

class Tape;

// Handle to a node on a tape. Cheap to copy; valid until the tape is rewound
// past the node.
struct Var {
  Tape* tape = nullptr;
  uint32_t idx = 0;
};

// Reverse-mode tape over Dual2 values. Each node carries (value, d/dt, d2/dt2)
// so one forward pass yields the time derivatives of everything it computes.
//
// Adjoints are Dual2 as well, stored in reversed Taylor order: for adjoint A of
// node x, dLoss/d(x.value) = A.d2/2, dLoss/d(x.d1) component sits in A.d1, and
// dLoss/d(x.d2) in A.v. With that convention the accumulation rule is plain
// Dual2 multiplication by the local partial, and the three component taps
// (comp_value / comp_d1 / comp_d2) have one-line backward rules. The seed at
// the loss node is (0, 0, 2).
class Tape {
 public:
  enum class Op : uint8_t { Leaf, Unary, Binary, Dot, CompV, CompD1, CompD2 };

  struct Node {
    Op op = Op::Leaf;
    uint32_t a = 0;  // parent (Dot: first weight index)
    uint32_t b = 0;  // parent (Dot: first input index)
    uint32_t c = 0;  // Dot: bias index
    uint32_t n = 0;  // Dot: span length
    Dual2 pa;        // partial wrt a
    Dual2 pb;        // partial wrt b
  };

  Var leaf(double v) { return leaf(Dual2(v)); }
  Var leaf(Dual2 v) {
    nodes_.push_back(Node{});
    val_.push_back(v);
    return {this, static_cast<uint32_t>(nodes_.size() - 1)};
  }
  Var constant(double v) { return leaf(v); }

  void set(Var x, double v) { val_[x.idx] = Dual2(v); }
  void set(Var x, Dual2 v) { val_[x.idx] = v; }

  Dual2 value(Var x) const { return val_[x.idx]; }
  size_t size() const { return nodes_.size(); }

  // Truncate back to a previously captured size; keeps capacity. Used to
  // re-record the per-step graph on top of persistent leaves.
  void rewind(size_t mark) {
    nodes_.resize(mark);
    val_.resize(mark);
  }

  Var unary(Var x, Dual2 value, Dual2 partial) {
    Node nd;
    nd.op = Op::Unary;
    nd.a = x.idx;
    nd.pa = partial;
    return push(nd, value);
  }

  Var binary(Var x, Var y, Dual2 value, Dual2 px, Dual2 py) {
    Node nd;
    nd.op = Op::Binary;
    nd.a = x.idx;
    nd.b = y.idx;
    nd.pa = px;
    nd.pb = py;
    return push(nd, value);
  }

  // y = bias + sum_j w[j]*x[j] over two contiguous index ranges. The network
  // layers allocate weights and activations contiguously to use this.
  Var dot(uint32_t w_first, uint32_t x_first, uint32_t n, uint32_t bias_idx) {
    Dual2 acc = val_[bias_idx];
    for (uint32_t j = 0; j < n; ++j) acc = acc + val_[w_first + j] * val_[x_first + j];
    Node nd;
    nd.op = Op::Dot;
    nd.a = w_first;
    nd.b = x_first;
    nd.c = bias_idx;
    nd.n = n;
    return push(nd, acc);
  }

  Var comp_value(Var x) {
    Node nd;
    nd.op = Op::CompV;
    nd.a = x.idx;
    return push(nd, Dual2(val_[x.idx].v));
  }
  Var comp_d1(Var x) {
    Node nd;
    nd.op = Op::CompD1;
    nd.a = x.idx;
    return push(nd, Dual2(val_[x.idx].d1));
  }
  Var comp_d2(Var x) {
    Node nd;
    nd.op = Op::CompD2;
    nd.a = x.idx;
    return push(nd, Dual2(val_[x.idx].d2));
  }

  // Populates adjoints for every node reachable from `loss`.
  void backward(Var loss) {
    assert(loss.tape == this);
    adj_.assign(nodes_.size(), Dual2{});
    adj_[loss.idx] = Dual2(0.0, 0.0, 2.0);
    for (uint32_t i = loss.idx + 1; i-- > 0;) {
      const Node& nd = nodes_[i];
      const Dual2 a = adj_[i];
      if (a.v == 0.0 && a.d1 == 0.0 && a.d2 == 0.0) continue;
      switch (nd.op) {
        case Op::Leaf:
          break;
        case Op::Unary:
          acc(nd.a, nd.pa * a);
          break;
        case Op::Binary:
          acc(nd.a, nd.pa * a);
          acc(nd.b, nd.pb * a);
          break;
        case Op::Dot: {
          for (uint32_t j = 0; j < nd.n; ++j) {
            acc(nd.a + j, val_[nd.b + j] * a);
            acc(nd.b + j, val_[nd.a + j] * a);
          }
          acc(nd.c, a);
          break;
        }
        case Op::CompV:
          adj_[nd.a].d2 += a.d2;
          break;
        case Op::CompD1:
          adj_[nd.a].d1 += 0.5 * a.d2;
          break;
        case Op::CompD2:
          adj_[nd.a].v += a.d2;
          break;
      }
    }
  }

  // dLoss/d(value of x); valid after backward().
  double grad(Var x) const { return 0.5 * adj_[x.idx].d2; }
  Dual2 adjoint(Var x) const { return adj_[x.idx]; }

 private:
  Var push(const Node& nd, Dual2 v) {
    nodes_.push_back(nd);
    val_.push_back(v);
    return {this, static_cast<uint32_t>(nodes_.size() - 1)};
  }
  void acc(uint32_t i, Dual2 d) { adj_[i] = adj_[i] + d; }

  std::vector<Node> nodes_;
  std::vector<Dual2> val_;
  std::vector<Dual2> adj_;
};

inline Dual2 value(Var x) { return x.tape->value(x); }
inline double val(Var x) { return x.tape->value(x).v; }

inline Var operator+(Var x, Var y) {
  return x.tape->binary(x, y, value(x) + value(y), Dual2(1.0), Dual2(1.0));
}
inline Var operator-(Var x, Var y) {
  return x.tape->binary(x, y, value(x) - value(y), Dual2(1.0), Dual2(-1.0));
}
inline Var operator*(Var x, Var y) {
  return x.tape->binary(x, y, value(x) * value(y), value(y), value(x));
}
inline Var operator/(Var x, Var y) {
  const Dual2 q = value(x) / value(y);
  return x.tape->binary(x, y, q, 1.0 / value(y), -q / value(y));
}
inline Var operator-(Var x) { return x.tape->unary(x, -value(x), Dual2(-1.0)); }

inline Var operator+(Var x, double c) { return x.tape->unary(x, value(x) + c, Dual2(1.0)); }
inline Var operator+(double c, Var x) { return x + c; }
inline Var operator-(Var x, double c) { return x + (-c); }
inline Var operator-(double c, Var x) { return x.tape->unary(x, c - value(x), Dual2(-1.0)); }
inline Var operator*(Var x, double c) { return x.tape->unary(x, value(x) * c, Dual2(c)); }
inline Var operator*(double c, Var x) { return x * c; }
inline Var operator/(Var x, double c) { return x * (1.0 / c); }
inline Var operator/(double c, Var x) {
  const Dual2 w = value(x);
  return x.tape->unary(x, c / w, -c / (w * w));
}

// Unary maps record the Dual2 lift of g as the value and the lift of g' as
// the partial, so second-order tangents stay exact through backward.
inline Var exp(Var x) {
  const Dual2 xv = value(x);
  const double e = std::exp(xv.v);
  return x.tape->unary(x, chain(xv, e, e, e), chain(xv, e, e, e));
}
inline Var log(Var x) {
  const Dual2 xv = value(x);
  const double v = xv.v;
  return x.tape->unary(x, chain(xv, std::log(v), 1.0 / v, -1.0 / (v * v)),
                       chain(xv, 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)));
}
inline Var sin(Var x) {
  const Dual2 xv = value(x);
  const double s = std::sin(xv.v), c = std::cos(xv.v);
  return x.tape->unary(x, chain(xv, s, c, -s), chain(xv, c, -s, -c));
}
inline Var cos(Var x) {
  const Dual2 xv = value(x);
  const double s = std::sin(xv.v), c = std::cos(xv.v);
  return x.tape->unary(x, chain(xv, c, -s, -c), chain(xv, -s, -c, s));
}
inline Var tanh(Var x) {
  const Dual2 xv = value(x);
  const double u = std::tanh(xv.v);
  const double du = 1.0 - u * u;
  return x.tape->unary(x, chain(xv, u, du, -2.0 * u * du),
                       chain(xv, du, -2.0 * u * du, du * (6.0 * u * u - 2.0)));
}
inline Var logistic(Var x) {
  const Dual2 xv = value(x);
  const double s = logistic(xv.v);
  const double ds = s * (1.0 - s);
  return x.tape->unary(x, chain(xv, s, ds, ds * (1.0 - 2.0 * s)),
                       chain(xv, ds, ds * (1.0 - 2.0 * s),
                             ds * (1.0 - 6.0 * s + 6.0 * s * s)));
}
inline Var softplus(Var x) {
  const Dual2 xv = value(x);
  const double s = logistic(xv.v);
  const double ds = s * (1.0 - s);
  return x.tape->unary(x, chain(xv, softplus(xv.v), s, ds),
                       chain(xv, s, ds, ds * (1.0 - 2.0 * s)));
}
inline Var sqrt(Var x) {
  const Dual2 xv = value(x);
  const double v = xv.v, r = std::sqrt(v);
  return x.tape->unary(x, chain(xv, r, 0.5 / r, -0.25 / (v * r)),
                       chain(xv, 0.5 / r, -0.25 / (v * r), 0.375 / (v * v * r)));
}
inline Var asin(Var x) {
  const Dual2 xv = value(x);
  const double v = xv.v;
  const double s = 1.0 / std::sqrt(1.0 - v * v);
  const double s3 = s * s * s;
  return x.tape->unary(x, chain(xv, std::asin(v), s, v * s3),
                       chain(xv, s, v * s3, (1.0 + 2.0 * v * v) * s3 * s * s));
}
inline Var sq(Var x) {
  const Dual2 xv = value(x);
  return x.tape->unary(x, chain(xv, xv.v * xv.v, 2.0 * xv.v, 2.0), 2.0 * xv);
}
inline Var atan2(Var y, Var x) {
  const Dual2 yv = value(y), xv = value(x);
  const Dual2 r2 = xv * xv + yv * yv;
  return y.tape->binary(y, x, atan2(yv, xv), xv / r2, -yv / r2);
}

inline Var atan2(double y, Var x) { return atan2(x.tape->constant(y), x); }
inline Var atan2(Var y, double x) { return atan2(y, y.tape->constant(x)); }

inline Var comp_value(Var x) { return x.tape->comp_value(x); }
inline Var comp_d1(Var x) { return x.tape->comp_d1(x); }
inline Var comp_d2(Var x) { return x.tape->comp_d2(x); }

// Value snapshot with no parents: downstream gradients stop here. Used where
// a quantity serves as a learning target rather than a trainable path.
inline Var stop_gradient(Var x) { return x.tape->leaf(value(x)); }

// ---------------------------------------------------------------------------
// Gradient verification against central finite differences.

struct GradCheckCoord {
  size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_err = 0.0;
};

struct GradCheckReport {
  double max_rel_err = 0.0;
  size_t worst_index = 0;
  size_t checked = 0;
  double tol = 0.0;
  std::vector<GradCheckCoord> failures;

  bool passed() const { return max_rel_err < tol; }
};

// Relative error with a small additive floor so near-zero gradients are judged
// in absolute terms instead of blowing up the ratio.
inline double gradcheck_rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         (std::abs(analytic) + std::abs(numeric) + 1e-4);
}

// f builds a scalar loss from leaves placed at `point`. Checks reverse-mode
// gradients coordinate by coordinate; `coords` restricts to a subset.
inline GradCheckReport grad_check(
    const std::function<Var(Tape&, const std::vector<Var>&)>& f,
    const std::vector<double>& point, double h = 1e-5, double tol = 1e-4,
    const std::vector<size_t>* coords = nullptr) {
  auto eval = [&](const std::vector<double>& p) {
    Tape tape;
    std::vector<Var> leaves;
    leaves.reserve(p.size());
    for (double v : p) leaves.push_back(tape.leaf(v));
    return val(f(tape, leaves));
  };

  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(point.size());
  for (double v : point) leaves.push_back(tape.leaf(v));
  Var loss = f(tape, leaves);
  tape.backward(loss);

  std::vector<size_t> all;
  if (!coords) {
    all.resize(point.size());
    for (size_t i = 0; i < all.size(); ++i) all[i] = i;
    coords = &all;
  }

  GradCheckReport report;
  report.tol = tol;
  std::vector<double> p = point;
  for (size_t i : *coords) {
    const double analytic = tape.grad(leaves[i]);
    const double orig = p[i];
    p[i] = orig + h;
    const double fp = eval(p);
    p[i] = orig - h;
    const double fm = eval(p);
    p[i] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    const double rel = gradcheck_rel_err(analytic, numeric);
    ++report.checked;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_index = i;
    }
    if (rel >= tol) report.failures.push_back({i, analytic, numeric, rel});
  }
  return report;
}

}  // namespace myodyn
