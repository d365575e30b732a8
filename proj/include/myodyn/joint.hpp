#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "myodyn/muscle.hpp"

namespace myodyn {

// Moment-arm polynomial plus the muscle-tendon length anchor at q = 0. The
// flexor/extensor sign convention is folded into the coefficients.
struct MuscleGeometry {
  std::string name;
  std::vector<double> arm_coeffs;  // r(q) = sum c_i q^i  (m, q in rad)
  double lmt_ref = 0.0;            // muscle-tendon length at q = 0 (m)
};

struct JointState {
  double q = 0.0;     // joint angle (rad, flexion positive)
  double qdot = 0.0;  // angular velocity (rad/s)
};

// Rigid-segment hinge model: hand mass, lever arm, principal inertia,
// viscous damping, gravity, and the muscle routing geometry.
struct JointModel {
  double m = 0.45;
  double L = 0.07;
  double Ip = 1e-4;
  double C = 0.05;
  double g = 9.81;
  double q_min = -1.5707963267948966;
  double q_max = 1.5707963267948966;
  std::vector<MuscleGeometry> muscles;

  double inertia() const { return m * L * L + Ip; }
  double gravity_torque_scale() const { return m * g * L; }
};

inline void validate(const JointModel& model) {
  if (!(model.m >= 0.0 && model.L >= 0.0 && model.Ip >= 0.0))
    throw std::invalid_argument("joint model: m, L, Ip must be nonnegative");
  if (!(model.inertia() > 0.0))
    throw std::invalid_argument("joint model: total inertia must be positive");
  if (!(model.C >= 0.0)) throw std::invalid_argument("joint model: damping must be nonnegative");
  if (!(model.q_min < model.q_max))
    throw std::invalid_argument("joint model: empty motion range");
  for (const auto& geo : model.muscles)
    if (geo.arm_coeffs.empty())
      throw std::invalid_argument("muscle geometry " + geo.name + ": no moment-arm coefficients");
}

template <class S>
void check_motion_range(S q, const JointModel& model) {
  const double qv = val(q);
  if (qv < model.q_min || qv > model.q_max)
    throw std::out_of_range("joint angle outside configured motion range");
}

// r(q) = sum c_i q^i, evaluated by Horner's rule.
template <class S>
auto moment_arm(S q, const MuscleGeometry& geo, const JointModel& model) {
  check_motion_range(q, model);
  auto r = q * 0.0 + geo.arm_coeffs.back();
  for (size_t i = geo.arm_coeffs.size() - 1; i-- > 0;) r = r * q + geo.arm_coeffs[i];
  return r;
}

// lmt(q) = lmt_ref - integral_0^q r(u) du, integrated analytically so that
// d(lmt)/dq = -r(q) holds exactly.
template <class S>
auto musculotendon_length(S q, const MuscleGeometry& geo, const JointModel& model) {
  check_motion_range(q, model);
  const size_t d = geo.arm_coeffs.size();
  auto acc = q * 0.0 + geo.arm_coeffs[d - 1] / static_cast<double>(d);
  for (size_t i = d - 1; i-- > 0;)
    acc = acc * q + geo.arm_coeffs[i] / static_cast<double>(i + 1);
  return geo.lmt_ref - acc * q;
}

// lmt_ref such that lm(q=0) = margin * l0. The passive-force curve switches
// on exactly at lm = l0, so anchoring slightly short keeps the rest pose off
// that discontinuity.
template <class PS>
double anchored_lmt_ref(const MuscleParamsT<PS>& p, double margin = 0.999) {
  const double s = std::sin(val(p.phi0));
  return val(p.l_slack) +
         val(p.l0) * std::sqrt(margin * margin - s * s);
}

// Fiber kinematics at a joint state: closed-form length/pennation plus the
// chain-rule velocity v = d(lm)/d(lmt) * d(lmt)/dq * qdot.
template <class S, class PS>
auto muscle_kinematics(S q, S qdot, const MuscleGeometry& geo,
                       const MuscleParamsT<PS>& p, const JointModel& model) {
  const auto lmt = musculotendon_length(q, geo, model);
  auto kin = fiber_length(lmt, p);
  const auto r = moment_arm(q, geo, model);
  kin.v = ((lmt - p.l_slack) / kin.lm) * (-r) * qdot;
  return kin;
}

template <class S, class PS>
auto fiber_velocity(S q, S qdot, const MuscleGeometry& geo,
                    const MuscleParamsT<PS>& p, const JointModel& model) {
  return muscle_kinematics(q, qdot, geo, p, model).v;
}

// Torque plus per-muscle forces, for oracle labeling.
template <class CS>
struct TorqueResultT {
  CS tau{};
  std::vector<CS> forces;
};

// tau = sum_n Fmt_n(a_n, kinematics(q, qdot)) * r_n(q).
template <class S, class ES, class AS, class PS>
auto joint_torque(std::span<const ES> excitations, S q, S qdot,
                  std::span<const MuscleParamsT<PS>> params, AS shape,
                  const JointModel& model, const MuscleConstants& c = {}) {
  if (model.muscles.empty())
    throw std::invalid_argument("joint_torque: model has no muscles");
  if (excitations.size() != model.muscles.size() || params.size() != model.muscles.size())
    throw std::invalid_argument("joint_torque: excitation/parameter count mismatch");
  using CS = decltype(muscle_tendon_force(activation(excitations[0], shape),
                                          muscle_kinematics(q, qdot, model.muscles[0],
                                                            params[0], model),
                                          params[0], c) *
                      moment_arm(q, model.muscles[0], model));
  TorqueResultT<CS> out;
  out.forces.reserve(model.muscles.size());
  for (size_t n = 0; n < model.muscles.size(); ++n) {
    try {
      const auto a = activation(excitations[n], shape);
      const auto kin = muscle_kinematics(q, qdot, model.muscles[n], params[n], model);
      const auto fmt = muscle_tendon_force(a, kin, params[n], c);
      out.forces.push_back(fmt);
      const auto term = fmt * moment_arm(q, model.muscles[n], model);
      out.tau = n == 0 ? term : out.tau + term;
    } catch (const std::domain_error& ex) {
      throw std::domain_error("muscle " + model.muscles[n].name + ": " + ex.what());
    }
  }
  return out;
}

// qddot = (tau - m g L sin(q) - C qdot) / I.
template <class S>
auto angular_acceleration(S tau, S q, S qdot, const JointModel& model) {
  const double inertia = model.inertia();
  if (!(inertia > 0.0))
    throw std::invalid_argument("angular_acceleration: inertia must be positive");
  return (tau - model.gravity_torque_scale() * sin(q) - model.C * qdot) / inertia;
}

inline double angular_acceleration(double tau, const JointState& s, const JointModel& model) {
  return angular_acceleration(tau, s.q, s.qdot, model);
}

// Simulated ground-truth record on a uniform grid.
struct Trajectory {
  std::vector<double> times;
  std::vector<JointState> states;
  std::vector<std::vector<double>> excitations;  // per step, N values
  std::vector<std::vector<double>> forces;       // per step, N values
  std::vector<double> torque;
  double dt = 0.0;
};

inline double pendulum_energy(const JointState& s, const JointModel& model) {
  return 0.5 * model.inertia() * s.qdot * s.qdot +
         model.gravity_torque_scale() * (1.0 - std::cos(s.q));
}

using ExcitationFn = std::function<std::vector<double>(double)>;

namespace detail {

inline void check_excitations(const std::vector<double>& e, double t) {
  for (size_t n = 0; n < e.size(); ++n)
    if (e[n] < 0.0 || e[n] > 1.0) {
      std::ostringstream msg;
      msg << "simulate: excitation " << n << " outside [0,1] at t=" << t;
      throw std::domain_error(msg.str());
    }
}

}  // namespace detail

// Classical fixed-step RK4 on (q, qdot) with excitations sampled at the stage
// times. Aborts with a time/muscle diagnostic if the trajectory leaves the
// model's validity region.
inline Trajectory simulate(const ExcitationFn& excitation, const JointModel& model,
                           std::span<const MuscleParams> params, ActivationShape shape,
                           double q0, double qdot0, double dt, double t_end,
                           const MuscleConstants& c = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate: dt must be positive");
  validate(model);

  auto eval_torque = [&](double t, const JointState& s) {
    const auto e = excitation(t);
    detail::check_excitations(e, t);
    try {
      return joint_torque(std::span<const double>(e), s.q, s.qdot, params, shape.A,
                          model, c);
    } catch (const std::exception& ex) {
      std::ostringstream msg;
      msg << ex.what() << " (t=" << t << ")";
      throw std::domain_error(msg.str());
    }
  };

  auto derivative = [&](double t, const JointState& s) -> std::pair<double, double> {
    const double tau = eval_torque(t, s).tau;
    return {s.qdot, angular_acceleration(tau, s, model)};
  };

  const size_t steps = static_cast<size_t>(std::llround(t_end / dt));
  Trajectory traj;
  traj.dt = dt;
  traj.times.reserve(steps + 1);
  traj.states.reserve(steps + 1);

  JointState s{q0, qdot0};
  for (size_t i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) * dt;
    const auto e = excitation(t);
    auto res = eval_torque(t, s);
    traj.times.push_back(t);
    traj.states.push_back(s);
    traj.excitations.push_back(e);
    traj.forces.push_back(std::move(res.forces));
    traj.torque.push_back(res.tau);
    if (i == steps) break;

    const auto [k1q, k1v] = derivative(t, s);
    const auto [k2q, k2v] = derivative(t + 0.5 * dt, {s.q + 0.5 * dt * k1q, s.qdot + 0.5 * dt * k1v});
    const auto [k3q, k3v] = derivative(t + 0.5 * dt, {s.q + 0.5 * dt * k2q, s.qdot + 0.5 * dt * k2v});
    const auto [k4q, k4v] = derivative(t + dt, {s.q + dt * k3q, s.qdot + dt * k3v});
    s.q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    s.qdot += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
  return traj;
}

// Checks lmt(q) > lst over the motion range for every muscle; run at load.
inline void validate_geometry(const JointModel& model, std::span<const MuscleParams> params) {
  if (model.muscles.size() != params.size())
    throw std::invalid_argument("validate_geometry: muscle count mismatch");
  constexpr int kSamples = 64;
  for (size_t n = 0; n < model.muscles.size(); ++n) {
    for (int i = 0; i <= kSamples; ++i) {
      const double q = model.q_min + (model.q_max - model.q_min) * i / kSamples;
      const double lmt = musculotendon_length(q, model.muscles[n], model);
      if (!(lmt > params[n].l_slack)) {
        std::ostringstream msg;
        msg << "muscle " << model.muscles[n].name << ": muscle-tendon length " << lmt
            << " does not exceed tendon slack at q=" << q;
        throw std::invalid_argument(msg.str());
      }
    }
  }
}

}  // namespace myodyn
