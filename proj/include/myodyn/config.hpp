#pragma once

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "myodyn/ini.hpp"
#include "myodyn/joint.hpp"
#include "myodyn/network.hpp"
#include "myodyn/pinn.hpp"
#include "myodyn/synth.hpp"

namespace myodyn {

// Per-muscle block: initial physiological guesses, routing geometry, the
// excitation waveform slot, and the synthetic ground-truth offsets.
struct MuscleConfig {
  std::string name;
  MuscleParams params;  // initial guesses (identification starts here)
  std::vector<double> arm_coeffs;
  double fiber_margin = 0.92;  // lm(q=0) = margin * l0m
  double amp = 0.3;
  double base = 0.25;
  double phase = 0.0;
  double harmonic = 1.0;  // integer multiple of the profile speed
  double truth_f0_scale = 1.0;  // simulator truth: F0m * scale
  double truth_l0_shift = 0.0;  // simulator truth: l0m + shift (m)
};

struct DataConfig {
  double speed_hz = 0.5;
  double duration_s = 8.0;
  double settle_cycles = 2.0;
  double snr_db = std::numeric_limits<double>::infinity();
  double q0 = 0.0;
  double qdot0 = 0.0;
};

struct ToolConfig {
  JointModel joint;  // muscle geometry filled by build_model()
  std::vector<MuscleConfig> muscles;
  double truth_A = -2.29;
  NetworkConfig network;
  TrainConfig training;
  DataConfig data;

  JointModel build_model() const {
    JointModel model = joint;
    model.muscles.clear();
    for (const auto& m : muscles) {
      MuscleGeometry geo{m.name, m.arm_coeffs, anchored_lmt_ref(m.params, m.fiber_margin)};
      model.muscles.push_back(std::move(geo));
    }
    return model;
  }
  std::vector<MuscleParams> initial_params() const {
    std::vector<MuscleParams> out;
    for (const auto& m : muscles) out.push_back(m.params);
    return out;
  }
  std::vector<MuscleParams> true_params() const {
    std::vector<MuscleParams> out;
    for (const auto& m : muscles) {
      MuscleParams p = m.params;
      p.f0 *= m.truth_f0_scale;
      p.l0 += m.truth_l0_shift;
      out.push_back(p);
    }
    return out;
  }
  ActivationShape true_shape() const { return {truth_A}; }

  MotionProfile profile(double speed_hz_override = 0.0) const {
    MotionProfile p;
    p.speed_hz = speed_hz_override > 0.0 ? speed_hz_override : data.speed_hz;
    p.duration_s = data.duration_s;
    p.settle_s = data.settle_cycles / p.speed_hz;
    p.snr_db = data.snr_db;
    p.q0 = data.q0;
    p.qdot0 = data.qdot0;
    for (const auto& m : muscles) {
      p.amplitude.push_back(m.amp);
      p.baseline.push_back(m.base);
      p.phase.push_back(m.phase);
      p.harmonic.push_back(m.harmonic);
    }
    return p;
  }
};

// The synthetic reference subject: wrist flexors FCR, FCU against extensors
// ECRL, ECRB, ECU with standard initial muscle parameters and degree-2 moment
// arms, driving a gravity-loaded limb. The load makes the net joint torque
// comparable to individual muscle torques, and the per-muscle harmonics and
// phases decorrelate the muscles' temporal signatures; both are needed for
// the force scales to be observable from the dynamics residual. Ground-truth
// offsets keep every value inside the identification bounds.
inline ToolConfig make_default_config() {
  ToolConfig cfg;
  cfg.joint.m = 6.0;
  cfg.joint.L = 0.30;
  cfg.joint.Ip = 0.02;
  cfg.joint.C = 1.5;
  auto muscle = [](std::string name, double f0, double l0, double v0, double lst, double phi0,
                   std::vector<double> arm, double amp, double phase, double harmonic,
                   double f0_scale, double l0_shift) {
    MuscleConfig m;
    m.name = std::move(name);
    m.params = {l0, v0, f0, lst, phi0};
    m.arm_coeffs = std::move(arm);
    m.amp = amp;
    m.base = 0.05;
    m.phase = phase;
    m.harmonic = harmonic;
    m.truth_f0_scale = f0_scale;
    m.truth_l0_shift = l0_shift;
    // Rest fiber length short enough that the stretched fiber stays below
    // optimal over the motion range, keeping the passive-force switch out of
    // the trial.
    m.fiber_margin = 0.98 - (std::abs(m.arm_coeffs[0]) / m.params.l0) * 0.60;
    return m;
  };
  cfg.muscles = {
      muscle("FCR", 407.0, 0.062, 0.62, 0.24, 0.05, {0.015, -0.002, -0.001}, 0.50, 0.0, 1,
             1.25, 0.0008),
      muscle("FCU", 479.0, 0.051, 0.51, 0.26, 0.2, {0.016, -0.0015, -0.0008}, 0.45, 0.7, 2,
             0.80, -0.0006),
      muscle("ECRL", 337.0, 0.081, 0.81, 0.24, 0.0, {-0.014, -0.002, 0.0009}, 0.525, M_PI, 1,
             1.30, 0.0005),
      muscle("ECRB", 252.0, 0.058, 0.58, 0.22, 0.16, {-0.012, -0.0018, 0.0007}, 0.46,
             M_PI + 0.9, 2, 0.75, -0.0008),
      muscle("ECU", 192.0, 0.062, 0.62, 0.2285, 0.06, {-0.016, -0.0012, 0.0008}, 0.44, 0.4, 3,
             1.20, 0.0007),
  };
  cfg.data.speed_hz = 0.4;
  cfg.data.duration_s = 10.0;
  cfg.training.stride = 20;
  return cfg;
}

namespace confio {

inline std::string format_bool(bool v) { return v ? "true" : "false"; }

inline bool parse_bool(const std::string& s, const std::string& what) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("expected true/false for " + what + ", got '" + s + "'");
}

// Strict section reader: every key must be consumed exactly once.
class SectionReader {
 public:
  SectionReader(const IniDoc::Section& s, std::string origin)
      : section_(s), origin_(std::move(origin)) {}

  // Call after all reads: rejects keys the schema does not know.
  void finish() const {
    for (const auto& [k, v] : section_.entries)
      if (!used_.count(k))
        throw std::invalid_argument(origin_ + ": unknown key '" + k + "' in [" +
                                    section_.name + "]");
  }

  double number(const std::string& key, double fallback) {
    const auto* v = get(key);
    return v ? ini::parse_double(*v, key) : fallback;
  }
  int integer(const std::string& key, int fallback) {
    return static_cast<int>(number(key, fallback));
  }
  uint64_t unsigned64(const std::string& key, uint64_t fallback) {
    const auto* v = get(key);
    return v ? std::stoull(*v) : fallback;
  }
  bool boolean(const std::string& key, bool fallback) {
    const auto* v = get(key);
    return v ? parse_bool(*v, key) : fallback;
  }
  std::string text(const std::string& key, const std::string& fallback) {
    const auto* v = get(key);
    return v ? *v : fallback;
  }
  std::vector<double> list(const std::string& key, const std::vector<double>& fallback) {
    const auto* v = get(key);
    return v ? ini::parse_list(*v, key) : fallback;
  }

 private:
  const std::string* get(const std::string& key) {
    used_.insert(key);
    return section_.find(key);
  }
  const IniDoc::Section& section_;
  std::string origin_;
  std::set<std::string> used_;
};

}  // namespace confio

inline IniDoc to_ini(const ToolConfig& cfg) {
  IniDoc doc;
  auto& joint = doc.at("joint");
  joint.set("m", ini::format_double(cfg.joint.m));
  joint.set("L", ini::format_double(cfg.joint.L));
  joint.set("Ip", ini::format_double(cfg.joint.Ip));
  joint.set("C", ini::format_double(cfg.joint.C));
  joint.set("g", ini::format_double(cfg.joint.g));
  joint.set("q_min", ini::format_double(cfg.joint.q_min));
  joint.set("q_max", ini::format_double(cfg.joint.q_max));

  std::string names;
  for (size_t i = 0; i < cfg.muscles.size(); ++i) {
    if (i) names += ", ";
    names += cfg.muscles[i].name;
  }
  doc.at("muscles").set("names", names);

  for (const auto& m : cfg.muscles) {
    auto& s = doc.at("muscle." + m.name);
    s.set("F0m", ini::format_double(m.params.f0));
    s.set("l0m", ini::format_double(m.params.l0));
    s.set("v0", ini::format_double(m.params.v_max));
    s.set("lst", ini::format_double(m.params.l_slack));
    s.set("phi0", ini::format_double(m.params.phi0));
    s.set("arm_coeffs", ini::format_list(m.arm_coeffs));
    s.set("fiber_margin", ini::format_double(m.fiber_margin));
    s.set("amp", ini::format_double(m.amp));
    s.set("base", ini::format_double(m.base));
    s.set("phase", ini::format_double(m.phase));
    s.set("harmonic", ini::format_double(m.harmonic));
    s.set("truth_F0m_scale", ini::format_double(m.truth_f0_scale));
    s.set("truth_l0m_shift", ini::format_double(m.truth_l0_shift));
  }

  doc.at("truth").set("A", ini::format_double(cfg.truth_A));

  auto& net = doc.at("network");
  {
    std::string hidden;
    for (size_t i = 0; i < cfg.network.hidden.size(); ++i) {
      if (i) hidden += ", ";
      hidden += std::to_string(cfg.network.hidden[i]);
    }
    net.set("hidden", hidden);
  }
  net.set("dropout_rate", ini::format_double(cfg.network.dropout_rate));
  net.set("activation", to_string(cfg.network.activation));
  net.set("smooth_angle_head", confio::format_bool(cfg.network.smooth_angle_head));

  auto& tr = doc.at("training");
  tr.set("lr", ini::format_double(cfg.training.lr));
  tr.set("epochs", std::to_string(cfg.training.epochs));
  tr.set("batch_size", std::to_string(cfg.training.batch_size));
  tr.set("w1", ini::format_double(cfg.training.w1));
  tr.set("w2", ini::format_double(cfg.training.w2));
  tr.set("seed", std::to_string(cfg.training.seed));
  tr.set("val_fraction", ini::format_double(cfg.training.val_fraction));
  tr.set("holdout", cfg.training.interleaved_holdout ? "interleaved" : "tail");
  tr.set("stride", std::to_string(cfg.training.stride));
  tr.set("per_muscle_A", confio::format_bool(cfg.training.per_muscle_A));

  auto& data = doc.at("data");
  data.set("speed_hz", ini::format_double(cfg.data.speed_hz));
  data.set("duration_s", ini::format_double(cfg.data.duration_s));
  data.set("settle_cycles", ini::format_double(cfg.data.settle_cycles));
  data.set("snr_db",
           std::isinf(cfg.data.snr_db) ? "inf" : ini::format_double(cfg.data.snr_db));
  data.set("q0", ini::format_double(cfg.data.q0));
  data.set("qdot0", ini::format_double(cfg.data.qdot0));
  return doc;
}

// Full validation: every module precondition that can be checked statically.
inline void validate(const ToolConfig& cfg) {
  if (cfg.muscles.empty()) throw std::invalid_argument("config: no muscles");
  for (const auto& m : cfg.muscles) {
    validate(m.params, m.name);
    if (m.arm_coeffs.empty())
      throw std::invalid_argument("config: muscle " + m.name + " has no arm coefficients");
    if (!(m.fiber_margin > 0.1 && m.fiber_margin <= 1.0))
      throw std::invalid_argument("config: muscle " + m.name + " fiber_margin out of range");
    if (m.amp < 0.0 || m.base < 0.0 || m.amp + m.base > 1.0)
      throw std::invalid_argument("config: muscle " + m.name +
                                  " excitation amp+base must stay in [0,1]");
    if (!(m.truth_f0_scale > 0.5 && m.truth_f0_scale < 1.5))
      throw std::invalid_argument("config: muscle " + m.name +
                                  " truth_F0m_scale outside the identification bounds");
    if (!(std::abs(m.truth_l0_shift) < 0.001))
      throw std::invalid_argument("config: muscle " + m.name +
                                  " truth_l0m_shift outside the identification bounds");
  }
  if (!(cfg.truth_A >= kShapeMin && cfg.truth_A <= kShapeMax))
    throw std::invalid_argument("config: truth A outside [-3, 0.01]");

  const JointModel model = cfg.build_model();
  validate(model);
  const auto initial = cfg.initial_params();
  const auto truth = cfg.true_params();
  validate_geometry(model, std::span<const MuscleParams>(initial));
  validate_geometry(model, std::span<const MuscleParams>(truth));

  NetworkConfig net = cfg.network;
  net.n_muscles = static_cast<int>(cfg.muscles.size());
  net.input_dim = net.n_muscles + 1;
  validate(net);
  validate(cfg.training);
  if (!(cfg.data.speed_hz > 0.0 && cfg.data.duration_s > 0.0 && cfg.data.settle_cycles >= 0.0))
    throw std::invalid_argument("config: data block values out of range");
}

inline ToolConfig from_ini(const IniDoc& doc, const std::string& origin = "<config>") {
  ToolConfig cfg = make_default_config();
  const std::set<std::string> known = {"joint", "muscles", "truth", "network", "training", "data"};
  for (const auto& s : doc.sections) {
    if (known.count(s.name) || s.name.rfind("muscle.", 0) == 0) continue;
    throw std::invalid_argument(origin + ": unknown section [" + s.name + "]");
  }

  if (const auto* s = doc.find("joint")) {
    confio::SectionReader r(*s, origin);
    cfg.joint.m = r.number("m", cfg.joint.m);
    cfg.joint.L = r.number("L", cfg.joint.L);
    cfg.joint.Ip = r.number("Ip", cfg.joint.Ip);
    cfg.joint.C = r.number("C", cfg.joint.C);
    cfg.joint.g = r.number("g", cfg.joint.g);
    cfg.joint.q_min = r.number("q_min", cfg.joint.q_min);
    cfg.joint.q_max = r.number("q_max", cfg.joint.q_max);
    r.finish();
  }

  if (const auto* s = doc.find("muscles")) {
    confio::SectionReader r(*s, origin);
    const std::string names = r.text("names", "");
    if (!names.empty()) {
      // Rebuild the muscle list; unknown names start from a blank template.
      std::vector<MuscleConfig> muscles;
      std::istringstream in(names);
      std::string name;
      while (std::getline(in, name, ',')) {
        name = ini::trim(name);
        if (name.empty()) throw std::invalid_argument(origin + ": empty muscle name");
        const MuscleConfig* match = nullptr;
        for (const auto& m : cfg.muscles)
          if (m.name == name) match = &m;
        MuscleConfig m = match ? *match : MuscleConfig{};
        m.name = name;
        muscles.push_back(std::move(m));
      }
      cfg.muscles = std::move(muscles);
    }
    r.finish();
  }

  for (auto& m : cfg.muscles) {
    const auto* s = doc.find("muscle." + m.name);
    if (!s) continue;
    confio::SectionReader r(*s, origin);
    m.params.f0 = r.number("F0m", m.params.f0);
    m.params.l0 = r.number("l0m", m.params.l0);
    m.params.v_max = r.number("v0", m.params.v_max);
    m.params.l_slack = r.number("lst", m.params.l_slack);
    m.params.phi0 = r.number("phi0", m.params.phi0);
    m.arm_coeffs = r.list("arm_coeffs", m.arm_coeffs);
    m.fiber_margin = r.number("fiber_margin", m.fiber_margin);
    m.amp = r.number("amp", m.amp);
    m.base = r.number("base", m.base);
    m.phase = r.number("phase", m.phase);
    m.harmonic = r.number("harmonic", m.harmonic);
    m.truth_f0_scale = r.number("truth_F0m_scale", m.truth_f0_scale);
    m.truth_l0_shift = r.number("truth_l0m_shift", m.truth_l0_shift);
    r.finish();
  }
  for (const auto& s : doc.sections) {
    if (s.name.rfind("muscle.", 0) != 0) continue;
    const std::string name = s.name.substr(7);
    bool found = false;
    for (const auto& m : cfg.muscles) found = found || m.name == name;
    if (!found)
      throw std::invalid_argument(origin + ": section [" + s.name +
                                  "] has no entry in [muscles] names");
  }

  if (const auto* s = doc.find("truth")) {
    confio::SectionReader r(*s, origin);
    cfg.truth_A = r.number("A", cfg.truth_A);
    r.finish();
  }

  if (const auto* s = doc.find("network")) {
    confio::SectionReader r(*s, origin);
    const auto hidden = r.list("hidden", {64, 64, 64, 64});
    if (hidden.size() != cfg.network.hidden.size())
      throw std::invalid_argument(origin + ": network hidden must list 4 widths");
    for (size_t i = 0; i < hidden.size(); ++i)
      cfg.network.hidden[i] = static_cast<int>(hidden[i]);
    cfg.network.dropout_rate = r.number("dropout_rate", cfg.network.dropout_rate);
    cfg.network.activation =
        activation_from_string(r.text("activation", to_string(cfg.network.activation)));
    cfg.network.smooth_angle_head =
        r.boolean("smooth_angle_head", cfg.network.smooth_angle_head);
    r.finish();
  }

  if (const auto* s = doc.find("training")) {
    confio::SectionReader r(*s, origin);
    cfg.training.lr = r.number("lr", cfg.training.lr);
    cfg.training.epochs = r.integer("epochs", cfg.training.epochs);
    cfg.training.batch_size = r.integer("batch_size", cfg.training.batch_size);
    cfg.training.w1 = r.number("w1", cfg.training.w1);
    cfg.training.w2 = r.number("w2", cfg.training.w2);
    cfg.training.seed = r.unsigned64("seed", cfg.training.seed);
    cfg.training.val_fraction = r.number("val_fraction", cfg.training.val_fraction);
    const std::string holdout = r.text("holdout", "tail");
    if (holdout != "tail" && holdout != "interleaved")
      throw std::invalid_argument(origin + ": holdout must be tail or interleaved");
    cfg.training.interleaved_holdout = holdout == "interleaved";
    cfg.training.stride = r.integer("stride", cfg.training.stride);
    cfg.training.per_muscle_A = r.boolean("per_muscle_A", cfg.training.per_muscle_A);
    r.finish();
  }

  if (const auto* s = doc.find("data")) {
    confio::SectionReader r(*s, origin);
    cfg.data.speed_hz = r.number("speed_hz", cfg.data.speed_hz);
    cfg.data.duration_s = r.number("duration_s", cfg.data.duration_s);
    cfg.data.settle_cycles = r.number("settle_cycles", cfg.data.settle_cycles);
    cfg.data.snr_db = r.number("snr_db", cfg.data.snr_db);
    cfg.data.q0 = r.number("q0", cfg.data.q0);
    cfg.data.qdot0 = r.number("qdot0", cfg.data.qdot0);
    r.finish();
  }

  cfg.network.n_muscles = static_cast<int>(cfg.muscles.size());
  cfg.network.input_dim = cfg.network.n_muscles + 1;
  validate(cfg);
  return cfg;
}

inline ToolConfig load_config(const std::string& path) {
  return from_ini(ini::parse_file(path), path);
}

}  // namespace myodyn
