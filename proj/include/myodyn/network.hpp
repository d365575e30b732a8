#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "myodyn/tape.hpp"

namespace myodyn {

enum class Activation { ReLU, Tanh, Sigmoid };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "relu";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu" || s == "ReLU") return Activation::ReLU;
  if (s == "tanh" || s == "Tanh") return Activation::Tanh;
  if (s == "sigmoid" || s == "Sigmoid") return Activation::Sigmoid;
  throw std::invalid_argument("unknown activation: " + s);
}

// Four fully-connected blocks (linear, activation, dropout) feeding two
// regression heads (activation, dropout, linear): one scalar angle head and
// one force head with n_muscles outputs.
struct NetworkConfig {
  int input_dim = 6;  // time plus one envelope per muscle
  std::array<int, 4> hidden{64, 64, 64, 64};
  double dropout_rate = 0.3;
  Activation activation = Activation::ReLU;
  int n_muscles = 5;
  // The angle head uses a smooth unit tanh(softplus(x)) on its hidden layer
  // so the predicted angle is twice differentiable in time even with a ReLU
  // trunk; without it the second time derivative of a ReLU network vanishes
  // almost everywhere and the inertial residual term degenerates.
  bool smooth_angle_head = true;
};

inline void validate(const NetworkConfig& cfg) {
  if (cfg.n_muscles < 1) throw std::invalid_argument("network: n_muscles must be >= 1");
  if (cfg.input_dim != cfg.n_muscles + 1)
    throw std::invalid_argument("network: input_dim must equal n_muscles + 1");
  for (int h : cfg.hidden)
    if (h < 1) throw std::invalid_argument("network: hidden widths must be positive");
  if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0))
    throw std::invalid_argument("network: dropout rate must lie in [0, 1)");
}

struct NetworkWeights {
  struct Layer {
    int in = 0, out = 0;
    std::vector<double> w;  // row-major, out x in
    std::vector<double> b;
  };
  NetworkConfig cfg;
  std::vector<Layer> layers;  // trunk 0..3, angle head, force head

  size_t parameter_count() const {
    size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
  }
};

// Uniform fan-in initialization: every weight and bias in (-1/sqrt(in), 1/sqrt(in)).
inline NetworkWeights init_network(const NetworkConfig& cfg, uint64_t seed) {
  validate(cfg);
  NetworkWeights net;
  net.cfg = cfg;
  std::mt19937_64 rng(seed);
  auto unit = [&] { return (rng() >> 11) * 0x1.0p-53; };
  auto make_layer = [&](int in, int out) {
    NetworkWeights::Layer l;
    l.in = in;
    l.out = out;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    l.w.resize(static_cast<size_t>(in) * out);
    l.b.resize(out);
    for (auto& v : l.w) v = (2.0 * unit() - 1.0) * bound;
    for (auto& v : l.b) v = (2.0 * unit() - 1.0) * bound;
    return l;
  };
  int in = cfg.input_dim;
  for (int h : cfg.hidden) {
    net.layers.push_back(make_layer(in, h));
    in = h;
  }
  net.layers.push_back(make_layer(in, 1));             // angle head
  net.layers.push_back(make_layer(in, cfg.n_muscles));  // force head
  return net;
}

// Flat parameter vector in layer order (weights row-major, then biases).
inline std::vector<double> flatten(const NetworkWeights& net) {
  std::vector<double> flat;
  flat.reserve(net.parameter_count());
  for (const auto& l : net.layers) {
    flat.insert(flat.end(), l.w.begin(), l.w.end());
    flat.insert(flat.end(), l.b.begin(), l.b.end());
  }
  return flat;
}

inline void unflatten(std::span<const double> flat, NetworkWeights& net) {
  size_t k = 0;
  for (auto& l : net.layers) {
    for (auto& v : l.w) v = flat[k++];
    for (auto& v : l.b) v = flat[k++];
  }
  if (k != flat.size()) throw std::invalid_argument("unflatten: size mismatch");
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline Dual2 relu(Dual2 x) { return x.v > 0.0 ? x : Dual2(0.0); }
inline Var relu(Var x) {
  const Dual2 v = value(x);
  // Always records one node so layer outputs stay contiguous on the tape.
  return v.v > 0.0 ? x.tape->unary(x, v, Dual2(1.0))
                   : x.tape->unary(x, Dual2(0.0), Dual2(0.0));
}

// One dropout mask per dropout site (4 trunk blocks, then angle head, then
// force head). Values are 0 or 1/(1-rate).
struct DropoutMasks {
  std::vector<std::vector<double>> site;
};

template <class Rng>
DropoutMasks draw_dropout_masks(const NetworkConfig& cfg, Rng& rng) {
  DropoutMasks m;
  const double keep = 1.0 - cfg.dropout_rate;
  auto draw = [&](int n) {
    std::vector<double> v(n);
    for (auto& x : v) x = ((rng() >> 11) * 0x1.0p-53) < keep ? 1.0 / keep : 0.0;
    return v;
  };
  for (int h : cfg.hidden) m.site.push_back(draw(h));
  m.site.push_back(draw(cfg.hidden.back()));  // angle head
  m.site.push_back(draw(cfg.hidden.back()));  // force head
  return m;
}

namespace detail {

// Stage-wise application keeps each stage's outputs contiguous, which the
// tape's fused dot op relies on.
template <class S>
void apply_activation(Activation kind, bool smooth, std::vector<S>& z) {
  if (smooth) {
    for (auto& x : z) x = softplus(x);
    for (auto& x : z) x = tanh(x);
    return;
  }
  switch (kind) {
    case Activation::ReLU:
      for (auto& x : z) x = relu(x);
      break;
    case Activation::Tanh:
      for (auto& x : z) x = tanh(x);
      break;
    case Activation::Sigmoid:
      for (auto& x : z) x = logistic(x);
      break;
  }
}

template <class S>
void apply_dropout(const std::vector<double>* mask, std::vector<S>& z) {
  if (!mask) return;
  for (size_t i = 0; i < z.size(); ++i) z[i] = z[i] * (*mask)[i];
}

}  // namespace detail

template <class S>
struct ForwardOut {
  S q{};
  std::vector<S> F;
};

// Eval/generic forward over plain scalars (double or Dual2). Pass masks to
// reproduce a training-mode pass; null means dropout is the identity.
template <class S>
ForwardOut<S> forward_network(const NetworkWeights& net, S t_input,
                              std::span<const double> e,
                              const DropoutMasks* masks = nullptr) {
  const auto& cfg = net.cfg;
  if (static_cast<int>(e.size()) != cfg.n_muscles)
    throw std::invalid_argument("forward_network: envelope count mismatch");

  std::vector<S> x;
  x.reserve(cfg.input_dim);
  x.push_back(t_input);
  for (double v : e) x.push_back(S(v));

  auto affine = [](const NetworkWeights::Layer& l, const std::vector<S>& in) {
    std::vector<S> out;
    out.reserve(l.out);
    for (int i = 0; i < l.out; ++i) {
      S acc = S(l.b[i]);
      for (int j = 0; j < l.in; ++j) acc = acc + l.w[static_cast<size_t>(i) * l.in + j] * in[j];
      out.push_back(acc);
    }
    return out;
  };

  for (size_t blk = 0; blk < cfg.hidden.size(); ++blk) {
    x = affine(net.layers[blk], x);
    detail::apply_activation(cfg.activation, false, x);
    detail::apply_dropout(masks ? &masks->site[blk] : nullptr, x);
  }

  std::vector<S> hq = x;
  detail::apply_activation(cfg.activation, cfg.smooth_angle_head, hq);
  detail::apply_dropout(masks ? &masks->site[4] : nullptr, hq);
  hq = affine(net.layers[4], hq);

  std::vector<S> hf = x;
  detail::apply_activation(cfg.activation, false, hf);
  detail::apply_dropout(masks ? &masks->site[5] : nullptr, hf);
  hf = affine(net.layers[5], hf);

  return {hq[0], std::move(hf)};
}

// Angle prediction with physical-time derivatives. The network sees the
// normalized time (t - t0)/duration; tangents are rescaled by the chain rule.
struct TimeDerivatives {
  double q = 0.0, qdot = 0.0, qddot = 0.0;
  std::vector<double> F;  // raw force-head outputs
};

inline TimeDerivatives forward_with_time_derivatives(
    const NetworkWeights& net, double t, double t0, double duration,
    std::span<const double> e, const DropoutMasks* masks = nullptr) {
  if (!(duration > 0.0))
    throw std::invalid_argument("forward_with_time_derivatives: duration must be positive");
  const Dual2 t_net = Dual2::seed((t - t0) / duration);
  auto out = forward_network<Dual2>(net, t_net, e, masks);
  TimeDerivatives td;
  td.q = out.q.v;
  td.qdot = out.q.d1 / duration;
  td.qddot = out.q.d2 / (duration * duration);
  td.F.reserve(out.F.size());
  for (const auto& f : out.F) td.F.push_back(f.v);
  return td;
}

// The same network bound to tape leaves for training. Weight leaves are laid
// out contiguously per layer in flatten() order, so each affine row is one
// fused dot node.
class TapeNetwork {
 public:
  TapeNetwork(Tape& tape, const NetworkConfig& cfg) : tape_(tape), cfg_(cfg) {
    validate(cfg);
    int in = cfg.input_dim;
    auto bind_layer = [&](int rows, int cols) {
      LayerBind b;
      b.in = cols;
      b.out = rows;
      b.w_first = alloc(static_cast<size_t>(rows) * cols);
      b.b_first = alloc(rows);
      layers_.push_back(b);
    };
    for (int h : cfg.hidden) {
      bind_layer(h, in);
      in = h;
    }
    bind_layer(1, in);
    bind_layer(cfg.n_muscles, in);
  }

  size_t n_params() const { return total_; }

  void load(std::span<const double> flat) {
    if (flat.size() != total_) throw std::invalid_argument("TapeNetwork::load: size mismatch");
    for (size_t i = 0; i < flat.size(); ++i)
      tape_.set(Var{&tape_, static_cast<uint32_t>(first_ + i)}, flat[i]);
  }

  double grad(size_t flat_index) const {
    return tape_.grad(Var{&tape_, static_cast<uint32_t>(first_ + flat_index)});
  }

  ForwardOut<Var> forward(Dual2 t_input, std::span<const double> e,
                          const DropoutMasks* masks) {
    if (static_cast<int>(e.size()) != cfg_.n_muscles)
      throw std::invalid_argument("TapeNetwork::forward: envelope count mismatch");
    // Inputs are recorded per call (not reused leaves): several samples can
    // share one tape within a step and backward reads each sample's own
    // input values. Recorded back to back so the dot op can span them.
    const Var t_node = tape_.leaf(t_input);
    for (int i = 0; i < cfg_.n_muscles; ++i) tape_.leaf(e[i]);
    uint32_t x_first = t_node.idx;
    int x_n = cfg_.input_dim;

    auto affine = [&](const LayerBind& l, uint32_t in_first) {
      const uint32_t out_first = static_cast<uint32_t>(tape_.size());
      for (int i = 0; i < l.out; ++i)
        tape_.dot(static_cast<uint32_t>(first_ + l.w_first + static_cast<size_t>(i) * l.in),
                  in_first, l.in, static_cast<uint32_t>(first_ + l.b_first + i));
      return out_first;
    };
    auto activate = [&](uint32_t in_first, int n, bool smooth) {
      std::vector<Var> tmp(n);
      for (int i = 0; i < n; ++i) tmp[i] = Var{&tape_, in_first + i};
      std::vector<Var> staged = tmp;
      detail::apply_activation(cfg_.activation, smooth, staged);
      return staged.front().idx;
    };
    auto dropout = [&](uint32_t in_first, int n, const std::vector<double>* mask) {
      if (!mask) return in_first;
      const uint32_t out_first = static_cast<uint32_t>(tape_.size());
      for (int i = 0; i < n; ++i) {
        Var v{&tape_, in_first + i};
        (void)(v * (*mask)[i]);
      }
      return out_first;
    };

    for (size_t blk = 0; blk < cfg_.hidden.size(); ++blk) {
      x_first = affine(layers_[blk], x_first);
      x_n = layers_[blk].out;
      x_first = activate(x_first, x_n, false);
      x_first = dropout(x_first, x_n, masks ? &masks->site[blk] : nullptr);
    }

    uint32_t hq = activate(x_first, x_n, cfg_.smooth_angle_head);
    hq = dropout(hq, x_n, masks ? &masks->site[4] : nullptr);
    hq = affine(layers_[4], hq);

    uint32_t hf = activate(x_first, x_n, false);
    hf = dropout(hf, x_n, masks ? &masks->site[5] : nullptr);
    hf = affine(layers_[5], hf);

    ForwardOut<Var> out;
    out.q = Var{&tape_, hq};
    out.F.reserve(cfg_.n_muscles);
    for (int i = 0; i < cfg_.n_muscles; ++i) out.F.push_back(Var{&tape_, hf + i});
    return out;
  }

 private:
  struct LayerBind {
    size_t w_first = 0, b_first = 0;
    int in = 0, out = 0;
  };

  size_t alloc(size_t n) {
    const size_t at = total_;
    for (size_t i = 0; i < n; ++i) {
      Var leaf = tape_.leaf(0.0);
      if (total_ == 0 && i == 0) first_ = leaf.idx;
      ++total_;
    }
    return at;
  }

  Tape& tape_;
  NetworkConfig cfg_;
  std::vector<LayerBind> layers_;
  size_t first_ = 0;
  size_t total_ = 0;
};

}  // namespace myodyn
