#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "myodyn/ini.hpp"
#include "myodyn/joint.hpp"
#include "myodyn/signal.hpp"
#include "myodyn/trial.hpp"

namespace myodyn {

// Cyclic excitation family: per-muscle raised sinusoids around a
// co-contraction baseline, flexors and extensors in antiphase.
//   e_n(t) = clamp(baseline_n + amplitude_n * (0.5 - 0.5 cos(2 pi f t + phase_n)), 0, 1)
struct MotionProfile {
  double speed_hz = 0.5;
  double duration_s = 8.0;
  double settle_s = 4.0;  // integrated before recording starts
  std::vector<double> amplitude;
  std::vector<double> baseline;
  std::vector<double> phase;
  std::vector<double> harmonic;  // per-muscle integer multiple of speed_hz
  double snr_db = std::numeric_limits<double>::infinity();
  double q0 = 0.0;
  double qdot0 = 0.0;
};

inline void validate(const MotionProfile& p, size_t n_muscles) {
  if (!(p.speed_hz > 0.0)) throw std::invalid_argument("profile: speed must be positive");
  if (!(p.duration_s > 0.0)) throw std::invalid_argument("profile: duration must be positive");
  if (!(p.settle_s >= 0.0)) throw std::invalid_argument("profile: settle must be nonnegative");
  if (p.amplitude.size() != n_muscles || p.baseline.size() != n_muscles ||
      p.phase.size() != n_muscles || p.harmonic.size() != n_muscles)
    throw std::invalid_argument("profile: per-muscle vectors must match muscle count");
  for (size_t n = 0; n < n_muscles; ++n) {
    if (p.amplitude[n] < 0.0 || p.baseline[n] < 0.0 ||
        p.baseline[n] + p.amplitude[n] > 1.0 + 1e-12)
      throw std::invalid_argument("profile: baseline + amplitude must stay in [0,1]");
    if (!(p.harmonic[n] >= 1.0))
      throw std::invalid_argument("profile: harmonic multiples must be >= 1");
  }
}

inline std::vector<double> profile_excitation(const MotionProfile& p, double t) {
  std::vector<double> e(p.amplitude.size());
  for (size_t n = 0; n < e.size(); ++n) {
    const double wave =
        0.5 - 0.5 * std::cos(2.0 * M_PI * p.speed_hz * p.harmonic[n] * t + p.phase[n]);
    e[n] = std::clamp(p.baseline[n] + p.amplitude[n] * wave, 0.0, 1.0);
  }
  return e;
}

struct SynthesisResult {
  TrialMatrix trial;
  IniDoc manifest;
};

namespace detail {

// Gaussian white noise, band-limited like the envelopes themselves, scaled to
// the requested SNR against each channel's variance.
inline void add_envelope_noise(TrialMatrix& trial, double snr_db, double fs,
                               std::mt19937_64& rng) {
  if (std::isinf(snr_db)) return;
  const size_t T = trial.rows(), N = trial.n_muscles();
  auto unit = [&] { return (rng() >> 11) * 0x1.0p-53; };
  for (size_t n = 0; n < N; ++n) {
    double mean = 0.0;
    for (size_t i = 0; i < T; ++i) mean += trial.envelopes[i][n];
    mean /= static_cast<double>(T);
    double var = 0.0;
    for (size_t i = 0; i < T; ++i) var += sq(trial.envelopes[i][n] - mean);
    var /= static_cast<double>(T);
    if (var <= 0.0) continue;

    std::vector<double> noise(T);
    for (size_t i = 0; i + 1 < T; i += 2) {
      const double u1 = std::max(unit(), 1e-300), u2 = unit();
      const double r = std::sqrt(-2.0 * std::log(u1));
      noise[i] = r * std::cos(2.0 * M_PI * u2);
      noise[i + 1] = r * std::sin(2.0 * M_PI * u2);
    }
    if (T % 2) noise[T - 1] = std::sqrt(-2.0 * std::log(std::max(unit(), 1e-300))) *
                              std::cos(2.0 * M_PI * unit());
    filters::filtfilt(filters::butterworth_lowpass(6.0, fs, 4), noise);

    double nvar = 0.0, nmean = 0.0;
    for (double v : noise) nmean += v;
    nmean /= static_cast<double>(T);
    for (double v : noise) nvar += sq(v - nmean);
    nvar /= static_cast<double>(T);
    const double target = var / std::pow(10.0, snr_db / 10.0);
    const double scale = nvar > 0.0 ? std::sqrt(target / nvar) : 0.0;
    for (size_t i = 0; i < T; ++i)
      trial.envelopes[i][n] =
          std::clamp(trial.envelopes[i][n] + scale * (noise[i] - nmean), 0.0, 1.0);
  }
}

}  // namespace detail

// Ground-truth pipeline: integrate the forward model under the profile's
// excitations, record at 1000 Hz after the settle window, optionally corrupt
// the envelopes, and keep the clean forces plus the generating parameters in
// the manifest.
inline SynthesisResult synthesize_trial(const MotionProfile& profile, const JointModel& model,
                                        std::span<const MuscleParams> true_params,
                                        ActivationShape true_shape, uint64_t seed) {
  validate(profile, model.muscles.size());
  validate_geometry(model, true_params);
  constexpr double kDt = 1e-3;

  auto excitation = [&](double t) { return profile_excitation(profile, t); };
  const double total = profile.settle_s + profile.duration_s;
  const auto traj = simulate(excitation, model, true_params, true_shape, profile.q0,
                             profile.qdot0, kDt, total);

  const size_t i0 = static_cast<size_t>(std::llround(profile.settle_s / kDt));
  SynthesisResult out;
  TrialMatrix& trial = out.trial;
  for (const auto& geo : model.muscles) trial.muscle_names.push_back(geo.name);
  for (size_t i = i0; i < traj.times.size(); ++i) {
    trial.times.push_back(traj.times[i] - profile.settle_s);
    trial.envelopes.push_back(traj.excitations[i]);
    trial.q.push_back(traj.states[i].q);
    trial.forces.push_back(traj.forces[i]);
  }

  std::mt19937_64 rng(seed);
  detail::add_envelope_noise(trial, profile.snr_db, 1.0 / kDt, rng);

  IniDoc& man = out.manifest;
  auto& prof = man.at("profile");
  prof.set("speed_hz", ini::format_double(profile.speed_hz));
  prof.set("duration_s", ini::format_double(profile.duration_s));
  prof.set("settle_s", ini::format_double(profile.settle_s));
  prof.set("snr_db", std::isinf(profile.snr_db) ? "inf" : ini::format_double(profile.snr_db));
  prof.set("seed", std::to_string(seed));
  prof.set("amplitude", ini::format_list(profile.amplitude));
  prof.set("baseline", ini::format_list(profile.baseline));
  prof.set("phase", ini::format_list(profile.phase));
  prof.set("harmonic", ini::format_list(profile.harmonic));
  auto& joint = man.at("joint");
  joint.set("m", ini::format_double(model.m));
  joint.set("L", ini::format_double(model.L));
  joint.set("Ip", ini::format_double(model.Ip));
  joint.set("C", ini::format_double(model.C));
  joint.set("g", ini::format_double(model.g));
  auto& truth = man.at("truth");
  truth.set("A", ini::format_double(true_shape.A));
  for (size_t n = 0; n < true_params.size(); ++n) {
    const auto& name = model.muscles[n].name;
    truth.set(name + ".F0m", ini::format_double(true_params[n].f0));
    truth.set(name + ".l0m", ini::format_double(true_params[n].l0));
    truth.set(name + ".v0", ini::format_double(true_params[n].v_max));
    truth.set(name + ".lst", ini::format_double(true_params[n].l_slack));
    truth.set(name + ".phi0", ini::format_double(true_params[n].phi0));
  }
  return out;
}

// Reads back the generating parameters stored by synthesize_trial.
struct ManifestTruth {
  double A = 0.0;
  std::vector<MuscleParams> params;
};

inline ManifestTruth read_truth(const IniDoc& manifest,
                                const std::vector<std::string>& muscle_names) {
  const auto* truth = manifest.find("truth");
  if (!truth) throw std::invalid_argument("manifest: missing [truth] section");
  ManifestTruth out;
  auto get = [&](const std::string& key) {
    const auto* v = truth->find(key);
    if (!v) throw std::invalid_argument("manifest: missing truth key " + key);
    return ini::parse_double(*v, key);
  };
  out.A = get("A");
  for (const auto& name : muscle_names)
    out.params.push_back({get(name + ".l0m"), get(name + ".v0"), get(name + ".F0m"),
                          get(name + ".lst"), get(name + ".phi0")});
  return out;
}

}  // namespace myodyn
