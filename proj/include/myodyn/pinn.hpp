#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "myodyn/joint.hpp"
#include "myodyn/muscle.hpp"
#include "myodyn/network.hpp"
#include "myodyn/tape.hpp"
#include "myodyn/trial.hpp"

namespace myodyn {

struct ParamBounds {
  double lo = 0.0, hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
};

// Trainable physiological parameters behind a smooth sigmoid
// reparameterization: mapped = lo + (hi - lo) * sigmoid(raw). Mapped values
// stay strictly inside their bounds for every raw value, and raw = 0 starts
// at the bound midpoint. Covers F0m and l0m per muscle plus the activation
// shape factor A (shared by default, per muscle on request).
class TrainableParams {
 public:
  TrainableParams() = default;

  TrainableParams(const std::vector<std::string>& muscle_names,
                  const std::vector<MuscleParams>& initial, bool per_muscle_A = false) {
    if (muscle_names.size() != initial.size())
      throw std::invalid_argument("trainable params: name/param count mismatch");
    n_muscles_ = muscle_names.size();
    per_muscle_A_ = per_muscle_A;
    const size_t a_count = per_muscle_A ? n_muscles_ : 1;
    for (size_t i = 0; i < a_count; ++i) {
      names_.push_back(per_muscle_A ? "A_" + muscle_names[i] : "A");
      bounds_.push_back({kShapeMin, kShapeMax});
    }
    for (size_t n = 0; n < n_muscles_; ++n) {
      names_.push_back(muscle_names[n] + ".F0m");
      bounds_.push_back({0.5 * initial[n].f0, 1.5 * initial[n].f0});
    }
    for (size_t n = 0; n < n_muscles_; ++n) {
      names_.push_back(muscle_names[n] + ".l0m");
      bounds_.push_back({initial[n].l0 - 0.001, initial[n].l0 + 0.001});
    }
    raw_.assign(bounds_.size(), 0.0);
  }

  size_t size() const { return raw_.size(); }
  size_t n_muscles() const { return n_muscles_; }
  bool per_muscle_A() const { return per_muscle_A_; }
  size_t a_count() const { return per_muscle_A_ ? n_muscles_ : 1; }
  size_t idx_A(size_t muscle) const { return per_muscle_A_ ? muscle : 0; }
  size_t idx_f0(size_t muscle) const { return a_count() + muscle; }
  size_t idx_l0(size_t muscle) const { return a_count() + n_muscles_ + muscle; }

  std::vector<double>& raw() { return raw_; }
  const std::vector<double>& raw() const { return raw_; }
  const std::vector<ParamBounds>& bounds() const { return bounds_; }
  const std::vector<std::string>& names() const { return names_; }

  double mapped(size_t i) const {
    return bounds_[i].lo + bounds_[i].width() * logistic(raw_[i]);
  }
  std::vector<double> mapped_all() const {
    std::vector<double> out(size());
    for (size_t i = 0; i < size(); ++i) out[i] = mapped(i);
    return out;
  }
  Var mapped_on_tape(Var raw_leaf, size_t i) const {
    return bounds_[i].lo + bounds_[i].width() * logistic(raw_leaf);
  }
  // Midpoints double as the "initial guess" column of variation reports.
  std::vector<double> initials() const {
    std::vector<double> out(size());
    for (size_t i = 0; i < size(); ++i) out[i] = bounds_[i].mid();
    return out;
  }

 private:
  size_t n_muscles_ = 0;
  bool per_muscle_A_ = false;
  std::vector<double> raw_;
  std::vector<ParamBounds> bounds_;
  std::vector<std::string> names_;
};

// tau normalization for the dynamics residual: gravity torque plus the
// summed muscle torque capacity at neutral pose. Gravity alone is a poor
// scale for a strongly actuated joint and lets the residual term swamp the
// data term. Falls back to 1 when both vanish.
inline double residual_torque_scale(const JointModel& model,
                                    std::span<const MuscleParams> initial) {
  double s = model.gravity_torque_scale();
  for (size_t n = 0; n < model.muscles.size() && n < initial.size(); ++n)
    s += initial[n].f0 * std::abs(moment_arm(0.0, model.muscles[n], model));
  return s > 0.0 ? s : 1.0;
}

template <class PS>
struct MappedMuscle {
  MuscleParamsT<PS> p;
  PS A;
};

template <class CS>
struct ResidualOut {
  CS rho{};  // normalized dynamics residual
  std::vector<CS> forces;
};

// rho = (I qddot + C qdot + m g L sin(q) - tau) / tau_scale with tau and the
// per-muscle forces composed from the activation and Hill primitives. Shared
// by the training graph (Var scalars) and the plain evaluators (double).
template <class S, class PS>
auto residual_and_forces(std::span<const double> e, S q, S qdot, S qddot,
                         std::span<const MappedMuscle<PS>> muscles, const JointModel& model,
                         const MuscleConstants& c, double tau_scale) {
  using CS = decltype(muscle_tendon_force(activation(e[0], muscles[0].A),
                                          muscle_kinematics(q, qdot, model.muscles[0],
                                                            muscles[0].p, model),
                                          muscles[0].p, c) *
                      moment_arm(q, model.muscles[0], model));
  if (e.size() != muscles.size() || muscles.size() != model.muscles.size())
    throw std::invalid_argument("residual: muscle count mismatch");
  ResidualOut<CS> out;
  out.forces.reserve(muscles.size());
  CS tau{};
  for (size_t n = 0; n < muscles.size(); ++n) {
    const auto a = activation(e[n], muscles[n].A);
    const auto kin = muscle_kinematics(q, qdot, model.muscles[n], muscles[n].p, model);
    const auto fmt = muscle_tendon_force(a, kin, muscles[n].p, c);
    out.forces.push_back(fmt);
    const auto term = fmt * moment_arm(q, model.muscles[n], model);
    tau = n == 0 ? term : tau + term;
  }
  out.rho = (model.inertia() * qddot + model.C * qdot +
             model.gravity_torque_scale() * sin(q) - tau) *
            (1.0 / tau_scale);
  return out;
}

// (1/T) sum (qhat - q)^2
inline double loss_q(std::span<const double> predicted, std::span<const double> truth) {
  if (predicted.size() != truth.size() || predicted.empty())
    throw std::invalid_argument("loss_q: length mismatch or empty");
  double acc = 0.0;
  for (size_t i = 0; i < predicted.size(); ++i) acc += sq(predicted[i] - truth[i]);
  return acc / static_cast<double>(predicted.size());
}

struct LossBreakdown {
  double lq = 0.0, lr1 = 0.0, lr2 = 0.0;
  double total(double w1, double w2) const { return lq + w1 * lr1 + w2 * lr2; }
};

struct PinnSample {
  double t_net = 0.0;  // normalized time in [0, 1]
  std::vector<double> e;
  double q = 0.0;
};

struct PinnDataset {
  std::vector<PinnSample> train, val;
  double duration = 0.0;
};

// Strided sampling plus a validation holdout: the trailing fraction of the
// trial by default, or every k-th sample when interleaved.
inline PinnDataset make_dataset(const TrialMatrix& trial, int stride, double val_fraction,
                                bool interleaved) {
  if (stride < 1) throw std::invalid_argument("dataset: stride must be >= 1");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0))
    throw std::invalid_argument("dataset: val fraction must lie in [0, 1)");
  PinnDataset ds;
  ds.duration = trial.duration();
  if (!(ds.duration > 0.0)) throw std::invalid_argument("dataset: empty trial");
  const double t0 = trial.times.front();
  std::vector<PinnSample> all;
  for (size_t i = 0; i < trial.rows(); i += stride)
    all.push_back({(trial.times[i] - t0) / ds.duration, trial.envelopes[i], trial.q[i]});
  if (val_fraction == 0.0) {
    ds.train = std::move(all);
    return ds;
  }
  if (interleaved) {
    const size_t k = std::max<size_t>(2, static_cast<size_t>(std::llround(1.0 / val_fraction)));
    for (size_t i = 0; i < all.size(); ++i)
      (i % k == k - 1 ? ds.val : ds.train).push_back(all[i]);
  } else {
    const size_t cut = static_cast<size_t>(static_cast<double>(all.size()) * (1.0 - val_fraction));
    ds.train.assign(all.begin(), all.begin() + cut);
    ds.val.assign(all.begin() + cut, all.end());
  }
  if (ds.train.empty()) throw std::invalid_argument("dataset: empty training split");
  return ds;
}

struct TrainConfig {
  double lr = 1e-4;
  int epochs = 1000;
  int batch_size = 1;
  double w1 = 1.0;
  double w2 = 1.0;
  uint64_t seed = 0;
  double val_fraction = 0.2;
  bool interleaved_holdout = false;
  int stride = 1;
  bool per_muscle_A = false;
};

inline void validate(const TrainConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("training: lr must be positive");
  if (cfg.epochs < 1) throw std::invalid_argument("training: epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("training: batch size must be >= 1");
  if (cfg.w1 < 0.0 || cfg.w2 < 0.0)
    throw std::invalid_argument("training: loss weights must be nonnegative");
  if (cfg.stride < 1) throw std::invalid_argument("training: stride must be >= 1");
}

// Standard Adam with bias correction.
struct AdamState {
  std::vector<double> m, v;
  int64_t t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  explicit AdamState(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grads, double lr) {
    if (params.size() != m.size() || grads.size() != m.size())
      throw std::invalid_argument("adam: size mismatch");
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
      params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

struct EpochRecord {
  int epoch = 0;
  double lq = 0.0, lr1 = 0.0, lr2 = 0.0, total = 0.0, val_lq = 0.0;
  std::vector<double> mapped;
};

struct TrainReport {
  std::vector<std::string> param_names;
  std::vector<double> param_initials;
  std::vector<EpochRecord> epochs;
  std::vector<double> identified;
  int best_epoch = 0;
  double best_val_lq = std::numeric_limits<double>::infinity();
  double wall_seconds = 0.0;
  bool baseline_mode = false;
};

struct TrainResult {
  NetworkWeights weights;
  TrainableParams params;
  TrainReport report;
};

// Persistent training graph: one tape holding the network weight leaves and
// the raw parameter leaves; the per-sample graph is re-recorded on top.
class PinnGraph {
 public:
  PinnGraph(const NetworkConfig& netcfg, const JointModel& model,
            const std::vector<MuscleParams>& initial, const TrainableParams& tp,
            const MuscleConstants& constants = {})
      : net_(tape_, netcfg),
        model_(model),
        initial_(initial),
        constants_(constants),
        tau_scale_(residual_torque_scale(model, initial)) {
    raw_leaves_.reserve(tp.size());
    for (size_t i = 0; i < tp.size(); ++i) raw_leaves_.push_back(tape_.leaf(0.0));
    for (size_t n = 0; n < initial_.size(); ++n) f_norm_.push_back(tp.bounds()[tp.idx_f0(n)].mid());
    mark_ = tape_.size();
  }

  Tape& tape() { return tape_; }
  size_t n_weights() const { return net_.n_params(); }
  double weight_grad(size_t i) const { return net_.grad(i); }
  double raw_grad(size_t i) const { return tape_.grad(raw_leaves_[i]); }
  const std::vector<double>& f_norm() const { return f_norm_; }
  double tau_scale() const { return tau_scale_; }

  void begin_step(std::span<const double> flat_weights, const TrainableParams& tp) {
    tape_.rewind(mark_);
    net_.load(flat_weights);
    for (size_t i = 0; i < tp.size(); ++i) tape_.set(raw_leaves_[i], tp.raw()[i]);
  }

  struct SampleLoss {
    Var loss;  // lq + w1 r1 + w2 r2 for this sample
    double lq = 0.0, lr1 = 0.0, lr2 = 0.0;
  };

  // Records one sample's loss. duration rescales network-time derivatives to
  // physical seconds; the same dropout masks feed the data and physics terms.
  // frozen_targets pins the R2 force targets to externally supplied values
  // (the gradient checker needs the targets held fixed under perturbation);
  // targets_out collects the target values used.
  SampleLoss sample_loss(const PinnSample& s, double duration, const TrainableParams& tp,
                         double w1, double w2, const DropoutMasks* masks,
                         std::span<const double> frozen_targets = {},
                         std::vector<double>* targets_out = nullptr) {
    auto out = net_.forward(Dual2::seed(s.t_net), s.e, masks);
    Var q_hat = comp_value(out.q);
    SampleLoss res{sq(q_hat - s.q)};
    res.lq = val(res.loss);

    if (w1 == 0.0 && w2 == 0.0) return res;

    Var qdot = comp_d1(out.q) * (1.0 / duration);
    Var qddot = comp_d2(out.q) * (1.0 / (duration * duration));

    std::vector<MappedMuscle<Var>> mapped;
    mapped.reserve(initial_.size());
    for (size_t n = 0; n < initial_.size(); ++n) {
      MappedMuscle<Var> mm;
      mm.p.l0 = tp.mapped_on_tape(raw_leaves_[tp.idx_l0(n)], tp.idx_l0(n));
      mm.p.f0 = tp.mapped_on_tape(raw_leaves_[tp.idx_f0(n)], tp.idx_f0(n));
      mm.p.v_max = tape_.constant(initial_[n].v_max);
      mm.p.l_slack = tape_.constant(initial_[n].l_slack);
      mm.p.phi0 = tape_.constant(initial_[n].phi0);
      mm.A = tp.mapped_on_tape(raw_leaves_[tp.idx_A(n)], tp.idx_A(n));
      mapped.push_back(mm);
    }

    auto phys = residual_and_forces(std::span<const double>(s.e), q_hat, qdot, qddot,
                                    std::span<const MappedMuscle<Var>>(mapped), model_,
                                    constants_, tau_scale_);
    if (w1 != 0.0) {
      Var r1 = sq(phys.rho);
      res.lr1 = val(r1);
      res.loss = res.loss + w1 * r1;
    }
    if (w2 != 0.0) {
      // The Hill-model force is the head's learning target: its value guides
      // the prediction but gradients must not flow back into the identified
      // parameters or the predicted kinematics through it.
      Var r2 = tape_.constant(0.0);
      for (size_t n = 0; n < initial_.size(); ++n) {
        Var f_hat = comp_value(out.F[n]) * f_norm_[n];
        Var target = frozen_targets.empty() ? stop_gradient(phys.forces[n])
                                            : tape_.constant(frozen_targets[n]);
        if (targets_out) targets_out->push_back(val(target));
        r2 = r2 + sq((f_hat - target) * (1.0 / f_norm_[n]));
      }
      r2 = r2 * (1.0 / static_cast<double>(initial_.size()));
      res.lr2 = val(r2);
      res.loss = res.loss + w2 * r2;
    }
    return res;
  }

 private:
  Tape tape_;
  TapeNetwork net_;
  JointModel model_;
  std::vector<MuscleParams> initial_;
  MuscleConstants constants_;
  std::vector<Var> raw_leaves_;
  std::vector<double> f_norm_;
  double tau_scale_ = 1.0;
  size_t mark_ = 0;
};

// Plain-double mapped bundle for evaluators and oracles.
inline std::vector<MappedMuscle<double>> mapped_muscles(const TrainableParams& tp,
                                                        const std::vector<MuscleParams>& initial) {
  std::vector<MappedMuscle<double>> out;
  out.reserve(initial.size());
  for (size_t n = 0; n < initial.size(); ++n) {
    MappedMuscle<double> mm;
    mm.p = initial[n];
    mm.p.f0 = tp.mapped(tp.idx_f0(n));
    mm.p.l0 = tp.mapped(tp.idx_l0(n));
    mm.A = tp.mapped(tp.idx_A(n));
    out.push_back(mm);
  }
  return out;
}

// Eval-mode losses over a full trial with the current weights and parameters.
inline LossBreakdown evaluate_losses(const NetworkWeights& weights, const TrainableParams& tp,
                                     const std::vector<MuscleParams>& initial,
                                     const TrialMatrix& trial, const JointModel& model,
                                     const MuscleConstants& constants = {}) {
  const double t0 = trial.times.front();
  const double duration = trial.duration();
  const double tau_scale = residual_torque_scale(model, initial);
  const auto mapped = mapped_muscles(tp, initial);
  std::vector<double> f_norm;
  for (size_t n = 0; n < initial.size(); ++n) f_norm.push_back(tp.bounds()[tp.idx_f0(n)].mid());

  LossBreakdown out;
  const size_t T = trial.rows();
  for (size_t i = 0; i < T; ++i) {
    const auto td = forward_with_time_derivatives(weights, trial.times[i], t0, duration,
                                                  trial.envelopes[i]);
    out.lq += sq(td.q - trial.q[i]);
    auto phys = residual_and_forces(std::span<const double>(trial.envelopes[i]), td.q, td.qdot,
                                    td.qddot, std::span<const MappedMuscle<double>>(mapped),
                                    model, constants, tau_scale);
    out.lr1 += sq(phys.rho);
    double r2 = 0.0;
    for (size_t n = 0; n < mapped.size(); ++n)
      r2 += sq((td.F[n] * f_norm[n] - phys.forces[n]) / f_norm[n]);
    out.lr2 += r2 / static_cast<double>(mapped.size());
  }
  out.lq /= static_cast<double>(T);
  out.lr1 /= static_cast<double>(T);
  out.lr2 /= static_cast<double>(T);
  return out;
}

namespace detail {

inline double eval_val_lq(const NetworkWeights& weights, const std::vector<PinnSample>& val) {
  if (val.empty()) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  for (const auto& s : val) {
    const auto out = forward_network<double>(weights, s.t_net, s.e, nullptr);
    acc += sq(out.q - s.q);
  }
  return acc / static_cast<double>(val.size());
}

}  // namespace detail

// Batch-1 (or small-batch) Adam training of the physics-informed objective.
// Deterministic given the seed. Tracks the best state by validation L_q; when
// there is no validation split, the final state wins.
inline TrainResult train(const TrialMatrix& trial, const JointModel& model,
                         const std::vector<MuscleParams>& initial, const NetworkConfig& netcfg,
                         const TrainConfig& cfg, const MuscleConstants& constants = {}) {
  validate(cfg);
  validate(trial);
  const auto t_start = std::chrono::steady_clock::now();

  std::vector<std::string> names;
  for (const auto& geo : model.muscles) names.push_back(geo.name);
  TrainableParams tp(names, initial, cfg.per_muscle_A);
  const PinnDataset ds = make_dataset(trial, cfg.stride, cfg.val_fraction,
                                      cfg.interleaved_holdout);

  NetworkWeights weights = init_network(netcfg, cfg.seed);
  std::vector<double> flat = flatten(weights);
  PinnGraph graph(netcfg, model, initial, tp, constants);

  AdamState adam(flat.size() + tp.size());
  std::mt19937_64 dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0xd1b54a32d192ed03ULL);

  TrainReport report;
  report.param_names = tp.names();
  report.param_initials = tp.initials();
  report.baseline_mode = cfg.w1 == 0.0 && cfg.w2 == 0.0;

  std::vector<double> grads(flat.size() + tp.size(), 0.0);
  std::vector<size_t> order(ds.train.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> best_flat = flat;
  std::vector<double> best_raw = tp.raw();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double sum_lq = 0.0, sum_lr1 = 0.0, sum_lr2 = 0.0, sum_total = 0.0;

    for (size_t pos = 0; pos < order.size(); pos += cfg.batch_size) {
      const size_t b_end = std::min(order.size(), pos + cfg.batch_size);
      const double inv_b = 1.0 / static_cast<double>(b_end - pos);

      graph.begin_step(flat, tp);
      Var batch_loss{};
      for (size_t k = pos; k < b_end; ++k) {
        const auto& s = ds.train[order[k]];
        const DropoutMasks masks = draw_dropout_masks(netcfg, dropout_rng);
        PinnGraph::SampleLoss sl;
        try {
          sl = graph.sample_loss(s, ds.duration, tp, cfg.w1, cfg.w2,
                                 netcfg.dropout_rate > 0.0 ? &masks : nullptr);
        } catch (const std::exception& ex) {
          std::ostringstream msg;
          msg << "training aborted at epoch " << epoch << ", sample t_net=" << s.t_net << ": "
              << ex.what();
          throw std::runtime_error(msg.str());
        }
        batch_loss = k == pos ? sl.loss : batch_loss + sl.loss;
        sum_lq += sl.lq;
        sum_lr1 += sl.lr1;
        sum_lr2 += sl.lr2;
        sum_total += sl.lq + cfg.w1 * sl.lr1 + cfg.w2 * sl.lr2;
      }
      if (b_end - pos > 1) batch_loss = batch_loss * inv_b;

      if (!std::isfinite(val(batch_loss))) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << ", step " << pos / cfg.batch_size;
        throw std::runtime_error(msg.str());
      }

      graph.tape().backward(batch_loss);
      for (size_t i = 0; i < flat.size(); ++i) grads[i] = graph.weight_grad(i);
      for (size_t i = 0; i < tp.size(); ++i) grads[flat.size() + i] = graph.raw_grad(i);

      std::vector<double> packed(flat.size() + tp.size());
      std::copy(flat.begin(), flat.end(), packed.begin());
      std::copy(tp.raw().begin(), tp.raw().end(), packed.begin() + flat.size());
      adam.step(packed, grads, cfg.lr);
      std::copy(packed.begin(), packed.begin() + flat.size(), flat.begin());
      std::copy(packed.begin() + flat.size(), packed.end(), tp.raw().begin());
    }

    unflatten(flat, weights);
    const double inv_T = 1.0 / static_cast<double>(order.size());
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lq = sum_lq * inv_T;
    rec.lr1 = sum_lr1 * inv_T;
    rec.lr2 = sum_lr2 * inv_T;
    rec.total = sum_total * inv_T;
    rec.val_lq = detail::eval_val_lq(weights, ds.val);
    rec.mapped = tp.mapped_all();
    report.epochs.push_back(rec);

    const double selector = ds.val.empty() ? rec.total : rec.val_lq;
    if (selector < report.best_val_lq) {
      report.best_val_lq = selector;
      report.best_epoch = epoch;
      best_flat = flat;
      best_raw = tp.raw();
    }
  }

  TrainResult result;
  result.params = tp;
  result.params.raw() = best_raw;
  unflatten(best_flat, weights);
  result.weights = std::move(weights);
  report.identified = result.params.mapped_all();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  result.report = std::move(report);
  return result;
}

// variation% = 100 * estimate / initial; undefined when the initial is zero.
struct VariationRow {
  std::string name;
  double estimate = 0.0;
  double initial = 0.0;
  double variation_pct = 0.0;
  bool defined = true;
};

inline std::vector<VariationRow> identify_report(std::span<const double> estimates,
                                                 std::span<const double> initials,
                                                 std::span<const std::string> names) {
  if (estimates.size() != initials.size() || estimates.size() != names.size())
    throw std::invalid_argument("identify_report: size mismatch");
  std::vector<VariationRow> rows;
  for (size_t i = 0; i < estimates.size(); ++i) {
    VariationRow row{names[i], estimates[i], initials[i], 0.0, initials[i] != 0.0};
    if (row.defined) row.variation_pct = 100.0 * estimates[i] / initials[i];
    rows.push_back(row);
  }
  return rows;
}

// Reverse-mode vs central-difference check of the full training loss on a
// small trial, in eval mode (no dropout) so the loss is deterministic.
// Checks every raw physiological parameter plus a sampled subset of weights.
inline GradCheckReport pinn_grad_check(const TrialMatrix& trial, const JointModel& model,
                                       const std::vector<MuscleParams>& initial,
                                       const NetworkConfig& netcfg, const TrainConfig& cfg,
                                       double h = 1e-5, double tol = 1e-4,
                                       double weight_fraction = 0.01,
                                       const MuscleConstants& constants = {}) {
  std::vector<std::string> names;
  for (const auto& geo : model.muscles) names.push_back(geo.name);
  TrainableParams tp(names, initial, cfg.per_muscle_A);
  const PinnDataset ds = make_dataset(trial, cfg.stride, 0.0, false);

  NetworkWeights weights = init_network(netcfg, cfg.seed);
  std::vector<double> flat = flatten(weights);
  PinnGraph graph(netcfg, model, initial, tp, constants);

  const size_t n_w = flat.size(), n_r = tp.size();

  // The R2 force targets are stop-gradient snapshots during training, so the
  // objective at one step treats them as constants. Collect them once at the
  // base point and hold them fixed for both the analytic pass and the finite
  // differences.
  std::vector<std::vector<double>> targets(ds.train.size());
  {
    graph.begin_step(flat, tp);
    for (size_t k = 0; k < ds.train.size(); ++k)
      graph.sample_loss(ds.train[k], ds.duration, tp, cfg.w1, cfg.w2, nullptr, {}, &targets[k]);
  }

  auto loss_at = [&](std::span<const double> w, const TrainableParams& p, bool want_grad,
                     std::vector<double>* grad_out) {
    graph.begin_step(w, p);
    Var total{};
    for (size_t k = 0; k < ds.train.size(); ++k) {
      auto sl = graph.sample_loss(ds.train[k], ds.duration, p, cfg.w1, cfg.w2, nullptr,
                                  targets[k]);
      total = k == 0 ? sl.loss : total + sl.loss;
    }
    total = total * (1.0 / static_cast<double>(ds.train.size()));
    if (want_grad) {
      graph.tape().backward(total);
      grad_out->resize(n_w + n_r);
      for (size_t i = 0; i < n_w; ++i) (*grad_out)[i] = graph.weight_grad(i);
      for (size_t i = 0; i < n_r; ++i) (*grad_out)[n_w + i] = graph.raw_grad(i);
    }
    return val(total);
  };

  std::vector<double> analytic;
  loss_at(flat, tp, true, &analytic);

  std::vector<size_t> coords;
  for (size_t i = 0; i < n_r; ++i) coords.push_back(n_w + i);
  std::mt19937_64 rng(cfg.seed ^ 0xa0761d6478bd642fULL);
  const size_t n_sample = std::max<size_t>(1, static_cast<size_t>(n_w * weight_fraction));
  for (size_t i = 0; i < n_sample; ++i) coords.push_back(rng() % n_w);

  GradCheckReport report;
  report.tol = tol;
  for (size_t c : coords) {
    double fp, fm;
    if (c < n_w) {
      std::vector<double> w = flat;
      w[c] += h;
      fp = loss_at(w, tp, false, nullptr);
      w[c] -= 2 * h;
      fm = loss_at(w, tp, false, nullptr);
    } else {
      TrainableParams p = tp;
      p.raw()[c - n_w] += h;
      fp = loss_at(flat, p, false, nullptr);
      p.raw()[c - n_w] -= 2 * h;
      fm = loss_at(flat, p, false, nullptr);
    }
    const double numeric = (fp - fm) / (2.0 * h);
    const double rel = gradcheck_rel_err(analytic[c], numeric);
    ++report.checked;
    if (rel > report.max_rel_err) {
      report.max_rel_err = rel;
      report.worst_index = c;
    }
    if (rel >= tol) report.failures.push_back({c, analytic[c], numeric, rel});
  }
  return report;
}

}  // namespace myodyn
