#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace myodyn {

// sEMG conditioning: band-pass, full rectification, low-pass envelope,
// MVC normalization.
struct PreprocessConfig {
  double band_low_hz = 20.0;
  double band_high_hz = 450.0;
  double envelope_hz = 6.0;
  int order = 4;  // per corner; even
  bool zero_phase = true;
  double mvc = 1.0;  // per-channel normalization constant
};

// Direct form II transposed biquad.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;

  void process(std::vector<double>& x) const {
    double s1 = 0.0, s2 = 0.0;
    for (double& v : x) {
      const double y = b0 * v + s1;
      s1 = b1 * v - a1 * y + s2;
      s2 = b2 * v - a2 * y;
      v = y;
    }
  }
};

namespace filters {

// Butterworth section Q values for an even-order cascade.
inline std::vector<double> butterworth_q(int order) {
  if (order < 2 || order % 2 != 0)
    throw std::invalid_argument("butterworth: order must be even and >= 2");
  std::vector<double> qs;
  for (int k = 0; k < order / 2; ++k)
    qs.push_back(1.0 / (2.0 * std::cos(M_PI * (2.0 * k + 1.0) / (2.0 * order))));
  return qs;
}

inline Biquad lowpass_biquad(double fc, double fs, double q) {
  const double w0 = 2.0 * M_PI * fc / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  const double a0 = 1.0 + alpha;
  Biquad s;
  s.b0 = (1.0 - c) / 2.0 / a0;
  s.b1 = (1.0 - c) / a0;
  s.b2 = s.b0;
  s.a1 = -2.0 * c / a0;
  s.a2 = (1.0 - alpha) / a0;
  return s;
}

inline Biquad highpass_biquad(double fc, double fs, double q) {
  const double w0 = 2.0 * M_PI * fc / fs;
  const double alpha = std::sin(w0) / (2.0 * q);
  const double c = std::cos(w0);
  const double a0 = 1.0 + alpha;
  Biquad s;
  s.b0 = (1.0 + c) / 2.0 / a0;
  s.b1 = -(1.0 + c) / a0;
  s.b2 = s.b0;
  s.a1 = -2.0 * c / a0;
  s.a2 = (1.0 - alpha) / a0;
  return s;
}

inline std::vector<Biquad> butterworth_lowpass(double fc, double fs, int order) {
  std::vector<Biquad> cas;
  for (double q : butterworth_q(order)) cas.push_back(lowpass_biquad(fc, fs, q));
  return cas;
}

inline std::vector<Biquad> butterworth_highpass(double fc, double fs, int order) {
  std::vector<Biquad> cas;
  for (double q : butterworth_q(order)) cas.push_back(highpass_biquad(fc, fs, q));
  return cas;
}

inline void run_cascade(const std::vector<Biquad>& cascade, std::vector<double>& x) {
  for (const auto& s : cascade) s.process(x);
}

// Forward-backward application: zero phase, squared magnitude response.
inline void filtfilt(const std::vector<Biquad>& cascade, std::vector<double>& x) {
  run_cascade(cascade, x);
  std::reverse(x.begin(), x.end());
  run_cascade(cascade, x);
  std::reverse(x.begin(), x.end());
}

inline void apply(const std::vector<Biquad>& cascade, std::vector<double>& x, bool zero_phase) {
  if (zero_phase)
    filtfilt(cascade, x);
  else
    run_cascade(cascade, x);
}

}  // namespace filters

// Band-pass (high-pass + low-pass cascade), rectify, envelope low-pass,
// divide by MVC, clamp to [0,1].
inline std::vector<double> preprocess_semg(std::vector<double> raw, double fs,
                                           const PreprocessConfig& cfg = {}) {
  if (!(fs > 0.0)) throw std::invalid_argument("preprocess: sample rate must be positive");
  const double nyquist = fs / 2.0;
  if (cfg.band_high_hz >= nyquist || cfg.band_low_hz >= nyquist || cfg.envelope_hz >= nyquist)
    throw std::invalid_argument("preprocess: filter corner at or above Nyquist");
  if (!(cfg.band_low_hz > 0.0 && cfg.band_low_hz < cfg.band_high_hz))
    throw std::invalid_argument("preprocess: band corners out of order");
  if (!(cfg.mvc > 0.0)) throw std::invalid_argument("preprocess: MVC must be positive");

  filters::apply(filters::butterworth_highpass(cfg.band_low_hz, fs, cfg.order), raw,
                 cfg.zero_phase);
  filters::apply(filters::butterworth_lowpass(cfg.band_high_hz, fs, cfg.order), raw,
                 cfg.zero_phase);
  for (double& v : raw) v = std::abs(v);
  filters::apply(filters::butterworth_lowpass(cfg.envelope_hz, fs, cfg.order), raw,
                 cfg.zero_phase);
  for (double& v : raw) v = std::clamp(v / cfg.mvc, 0.0, 1.0);
  return raw;
}

}  // namespace myodyn
