#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "myodyn/checkpoint.hpp"
#include "myodyn/network.hpp"
#include "myodyn/pinn.hpp"
#include "myodyn/trial.hpp"

namespace myodyn {

inline double rmse(std::span<const double> y, std::span<const double> yhat) {
  if (y.empty() || y.size() != yhat.size())
    throw std::invalid_argument("rmse: empty input or length mismatch");
  double acc = 0.0;
  for (size_t i = 0; i < y.size(); ++i) acc += sq(yhat[i] - y[i]);
  return std::sqrt(acc / static_cast<double>(y.size()));
}

// 1 - SS_res/SS_tot; undefined for constant ground truth.
inline std::optional<double> r_squared(std::span<const double> y, std::span<const double> yhat) {
  if (y.empty() || y.size() != yhat.size())
    throw std::invalid_argument("r_squared: empty input or length mismatch");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    ss_res += sq(y[i] - yhat[i]);
    ss_tot += sq(y[i] - mean);
  }
  if (ss_tot <= 0.0) return std::nullopt;
  return 1.0 - ss_res / ss_tot;
}

struct ChannelMetrics {
  std::string channel;
  double rmse_value = 0.0;
  std::optional<double> r2;
};

// Eval-mode predictions over a trial.
struct TrialPredictions {
  std::vector<double> q;
  std::vector<std::vector<double>> forces;  // per row, N values (physical units)
};

inline TrialPredictions predict_trial(const NetworkWeights& weights,
                                      std::span<const double> f_scale, const TrialMatrix& trial) {
  if (f_scale.size() != trial.n_muscles())
    throw std::invalid_argument("predict_trial: f_scale width mismatch");
  TrialPredictions out;
  const double t0 = trial.times.front();
  const double duration = trial.duration();
  out.q.reserve(trial.rows());
  out.forces.reserve(trial.rows());
  for (size_t i = 0; i < trial.rows(); ++i) {
    const auto fwd = forward_network<double>(weights, (trial.times[i] - t0) / duration,
                                             trial.envelopes[i], nullptr);
    out.q.push_back(fwd.q);
    std::vector<double> f(trial.n_muscles());
    for (size_t n = 0; n < f.size(); ++n) f[n] = fwd.F[n] * f_scale[n];
    out.forces.push_back(std::move(f));
  }
  return out;
}

// Per-channel metrics in the table layout: one row per muscle force channel
// (when ground-truth forces are present), then the angle.
inline std::vector<ChannelMetrics> evaluate_channels(const TrialMatrix& trial,
                                                     const TrialPredictions& pred) {
  if (pred.q.size() != trial.rows())
    throw std::invalid_argument("evaluate_channels: prediction length mismatch");
  std::vector<ChannelMetrics> out;
  if (trial.has_forces()) {
    for (size_t n = 0; n < trial.n_muscles(); ++n) {
      std::vector<double> truth(trial.rows()), est(trial.rows());
      for (size_t i = 0; i < trial.rows(); ++i) {
        truth[i] = trial.forces[i][n];
        est[i] = pred.forces[i][n];
      }
      out.push_back({trial.muscle_names[n], rmse(truth, est), r_squared(truth, est)});
    }
  }
  out.push_back({"Angle", rmse(trial.q, pred.q), r_squared(trial.q, pred.q)});
  return out;
}

inline std::vector<ChannelMetrics> evaluate_checkpoint(const Checkpoint& cp,
                                                       const TrialMatrix& trial) {
  return evaluate_channels(trial, predict_trial(cp.weights, cp.f_scale, trial));
}

// Intrasession protocol: score a trained state on a trial recorded at a
// different motion speed.
inline std::vector<ChannelMetrics> run_intrasession(const Checkpoint& cp,
                                                    const TrialMatrix& other_speed_trial) {
  return evaluate_checkpoint(cp, other_speed_trial);
}

// Rows: one method per row set, channels in fixed order.
struct ComparisonTable {
  std::vector<std::string> channels;
  std::vector<std::pair<std::string, std::vector<ChannelMetrics>>> methods;

  void add(const std::string& method, const std::vector<ChannelMetrics>& metrics) {
    if (channels.empty())
      for (const auto& m : metrics) channels.push_back(m.channel);
    if (metrics.size() != channels.size())
      throw std::invalid_argument("comparison table: channel set mismatch");
    for (size_t i = 0; i < metrics.size(); ++i)
      if (metrics[i].channel != channels[i])
        throw std::invalid_argument("comparison table: channel order mismatch");
    methods.emplace_back(method, metrics);
  }
};

namespace detail {

inline std::string format_r2(const std::optional<double>& r2) {
  return r2 ? ini::format_double(*r2) : "N/A";
}

}  // namespace detail

inline void save_comparison(const ComparisonTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "method,channel,rmse,r2\n";
  for (const auto& [method, metrics] : table.methods)
    for (const auto& m : metrics)
      out << method << "," << m.channel << "," << ini::format_double(m.rmse_value) << ","
          << detail::format_r2(m.r2) << "\n";
}

// Externally produced predictions (header: t,q_hat,F_<muscle>...) so other
// baselines can be scored with the same metrics.
inline TrialPredictions load_predictions(const std::string& path, const TrialMatrix& trial) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
  const auto header = detail::split_csv(line);
  if (header.size() < 2 || header[0] != "t" || header[1] != "q_hat")
    throw std::invalid_argument(path + ":1: header must be t,q_hat[,F_<muscle>...]");
  const bool with_forces = header.size() == trial.n_muscles() + 2;
  if (!with_forces && header.size() != 2)
    throw std::invalid_argument(path + ":1: unexpected column count");
  TrialPredictions pred;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (ini::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != header.size())
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": column count mismatch");
    pred.q.push_back(detail::parse_cell(cells[1], lineno, 1, path));
    std::vector<double> f;
    for (size_t i = 2; i < cells.size(); ++i)
      f.push_back(detail::parse_cell(cells[i], lineno, i, path));
    pred.forces.push_back(std::move(f));
  }
  if (pred.q.size() != trial.rows())
    throw std::invalid_argument(path + ": prediction rows differ from trial rows");
  return pred;
}

// Plot-ready emission: loss traces, parameter evolution, prediction overlays
// and per-channel RMSE bars.
inline void emit_report(const std::string& out_dir, const TrainReport& report,
                        const TrialMatrix& trial, const TrialPredictions& pred,
                        const ComparisonTable& table) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    std::ofstream out(fs::path(out_dir) / "losses.csv");
    out << "epoch,L_q,L_r1,L_r2,L_total,val_L_q\n";
    for (const auto& rec : report.epochs)
      out << rec.epoch << "," << ini::format_double(rec.lq) << "," << ini::format_double(rec.lr1)
          << "," << ini::format_double(rec.lr2) << "," << ini::format_double(rec.total) << ","
          << ini::format_double(rec.val_lq) << "\n";
  }
  {
    std::ofstream out(fs::path(out_dir) / "params_trace.csv");
    out << "epoch";
    for (const auto& name : report.param_names) out << "," << name;
    out << "\n";
    for (const auto& rec : report.epochs) {
      out << rec.epoch;
      for (double v : rec.mapped) out << "," << ini::format_double(v);
      out << "\n";
    }
  }
  {
    std::ofstream out(fs::path(out_dir) / "overlay.csv");
    out << "t,q,q_hat";
    for (const auto& name : trial.muscle_names) out << ",F_" << name << ",F_" << name << "_hat";
    out << "\n";
    for (size_t i = 0; i < trial.rows(); ++i) {
      out << ini::format_double(trial.times[i]) << "," << ini::format_double(trial.q[i]) << ","
          << ini::format_double(pred.q[i]);
      for (size_t n = 0; n < trial.n_muscles(); ++n) {
        out << "," << ini::format_double(trial.has_forces() ? trial.forces[i][n] : 0.0) << ","
            << ini::format_double(pred.forces[i][n]);
      }
      out << "\n";
    }
  }
  {
    std::ofstream out(fs::path(out_dir) / "rmse_bars.csv");
    out << "method,channel,rmse\n";
    for (const auto& [method, metrics] : table.methods)
      for (const auto& m : metrics)
        out << method << "," << m.channel << "," << ini::format_double(m.rmse_value) << "\n";
  }
  save_comparison(table, (fs::path(out_dir) / "metrics.csv").string());
}

}  // namespace myodyn
