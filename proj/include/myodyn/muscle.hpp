#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "myodyn/dual2.hpp"

namespace myodyn {

using std::exp;
using std::sqrt;
using std::asin;
using std::atan2;
using std::sin;
using std::cos;

// Per-muscle physiological parameters. The scalar type is generic so the
// trainable fields can be tape variables during optimization.
template <class S>
struct MuscleParamsT {
  S l0;       // optimal fiber length (m)
  S v_max;    // max contraction velocity (m/s)
  S f0;       // max isometric force (N)
  S l_slack;  // tendon slack length (m)
  S phi0;     // pennation angle at optimal fiber length (rad)
};

using MuscleParams = MuscleParamsT<double>;

inline void validate(const MuscleParams& p, const std::string& who) {
  if (!(p.l0 > 0.0)) throw std::domain_error(who + ": l0m must be positive");
  if (!(p.v_max > 0.0)) throw std::domain_error(who + ": v0 must be positive");
  if (!(p.f0 > 0.0)) throw std::domain_error(who + ": F0m must be positive");
  if (!(p.l_slack >= 0.0)) throw std::domain_error(who + ": lst must be nonnegative");
  if (!(p.phi0 >= 0.0 && p.phi0 < 1.5707963267948966))
    throw std::domain_error(who + ": phi0 must lie in [0, pi/2)");
}

// Nonlinear shape factor of the excitation-to-activation map.
struct ActivationShape {
  double A = 0.01;
};

constexpr double kShapeMin = -3.0;
constexpr double kShapeMax = 0.01;

// Fixed curve constants; not subject to identification.
struct MuscleConstants {
  double lambda = 0.15;  // activation-dependent optimal-length shift
  double k = 0.45;       // force-length shape
};

template <class S>
struct MuscleKinematicsT {
  S lm;   // fiber length (m)
  S phi;  // pennation angle (rad)
  S v;    // fiber lengthening velocity (m/s, shortening negative)
};

using MuscleKinematics = MuscleKinematicsT<double>;

// a = (exp(A e) - 1) / (exp(A) - 1); analytic limit a = e as A -> 0.
template <class S, class AS>
auto activation(S e, AS shape) {
  const double ev = val(e);
  if (ev < -1e-9 || ev > 1.0 + 1e-9)
    throw std::domain_error("activation: excitation outside [0,1]");
  const double av = val(shape);
  if (av < kShapeMin || av > kShapeMax)
    throw std::domain_error("activation: shape factor outside [-3, 0.01]");
  if (std::abs(av) < 1e-6) return e + 0.0 * shape;
  return (exp(shape * e) - 1.0) / (exp(shape) - 1.0);
}

// phi = arcsin(l0 sin(phi0) / lm): constant-height fiber geometry.
template <class S, class PS>
auto pennation(S lm, const MuscleParamsT<PS>& p) {
  const auto w = p.l0 * sin(p.phi0);
  if (val(lm) < val(w))
    throw std::domain_error("pennation: fiber shorter than its constant height");
  return asin(w / lm);
}

// Rigid tendon: lm cos(phi) = lmt - l_slack and lm sin(phi) = l0 sin(phi0)
// hold simultaneously, so both follow in closed form.
template <class S, class PS>
auto fiber_length(S lmt, const MuscleParamsT<PS>& p) {
  if (!(val(lmt) > val(p.l_slack)))
    throw std::domain_error("fiber_length: muscle-tendon length at or below tendon slack");
  const auto w = p.l0 * sin(p.phi0);
  const auto proj = lmt - p.l_slack;
  const auto lm = sqrt(sq(proj) + sq(w));
  const auto phi = atan2(w, proj);
  using CS = decltype(lm + phi);
  return MuscleKinematicsT<CS>{lm, phi, lm * 0.0};
}

// Active force-length curve on the activation-shifted normalized length.
template <class S, class AS, class PS>
auto force_length_active(S lm, AS a, const MuscleParamsT<PS>& p,
                         const MuscleConstants& c) {
  if (!(val(lm) > 0.0)) throw std::domain_error("force_length_active: lm must be positive");
  const double av = val(a);
  if (av < -1e-9 || av > 1.0 + 1e-9)
    throw std::domain_error("force_length_active: activation outside [0,1]");
  const auto lbar = lm / (p.l0 * (c.lambda * (1.0 - a) + 1.0));
  return exp(-sq(lbar - 1.0) / c.k);
}

// Piecewise force-velocity curve; continuous at vbar = 0 with f_v(0) = 1.
// The branch is picked on the forward value, ties going to the <= side.
template <class S>
auto force_velocity(S vbar) {
  const double v = val(vbar);
  if (v < -1.0 - 1e-12)
    throw std::domain_error("force_velocity: normalized velocity below -1");
  if (v <= 0.0) return 0.3 * (vbar + 1.0) / (0.3 - vbar);
  return (2.34 * vbar + 0.039) / (1.3 * vbar + 0.039);
}

// Passive-element force; zero at or below optimal length, exponential above.
template <class S, class PS>
auto force_passive(S lm, const MuscleParamsT<PS>& p) {
  if (!(val(lm) > 0.0)) throw std::domain_error("force_passive: lm must be positive");
  const auto lbar = lm / p.l0;
  if (val(lbar) <= 1.0) return 0.0 * (lbar * p.f0);
  return exp(10.0 * (lbar - 1.0) - 5.0) * p.f0;
}

// Fmt = (a f_v f_a F0 + F_PE) cos(phi).
template <class S, class AS, class PS>
auto muscle_tendon_force(AS a, const MuscleKinematicsT<S>& kin,
                         const MuscleParamsT<PS>& p, const MuscleConstants& c) {
  const auto vbar = kin.v / p.v_max;
  const auto active = a * force_velocity(vbar) * force_length_active(kin.lm, a, p, c) * p.f0;
  return (active + force_passive(kin.lm, p)) * cos(kin.phi);
}

}  // namespace myodyn
