#include "myodyn/joint.hpp"

#include <cmath>
#include <vector>

#include "gtest/gtest.h"

namespace {

using myodyn::ActivationShape;
using myodyn::JointModel;
using myodyn::JointState;
using myodyn::MuscleGeometry;
using myodyn::MuscleParams;

JointModel two_muscle_model() {
  JointModel model;
  model.muscles = {
      {"FLEX", {0.015, -0.002, -0.001}, 0.0},
      {"EXT", {-0.014, -0.002, 0.001}, 0.0},
  };
  return model;
}

std::vector<MuscleParams> two_muscle_params() {
  return {{0.062, 0.62, 407.0, 0.24, 0.05}, {0.081, 0.81, 337.0, 0.24, 0.0}};
}

void anchor_geometry(JointModel& model, const std::vector<MuscleParams>& params,
                     double margin = 0.999) {
  for (size_t n = 0; n < params.size(); ++n)
    model.muscles[n].lmt_ref = myodyn::anchored_lmt_ref(params[n], margin);
}

TEST(MomentArm, PolynomialCases) {
  JointModel model;
  model.muscles = {{"M", {0.015}, 0.3}};
  EXPECT_DOUBLE_EQ(myodyn::moment_arm(0.4, model.muscles[0], model), 0.015);

  model.muscles[0].arm_coeffs = {0.015, -0.002};
  EXPECT_NEAR(myodyn::moment_arm(0.5, model.muscles[0], model), 0.014, 1e-15);

  model.muscles[0].arm_coeffs = {-0.015};
  EXPECT_DOUBLE_EQ(myodyn::moment_arm(0.0, model.muscles[0], model), -0.015);

  EXPECT_THROW(myodyn::moment_arm(2.0, model.muscles[0], model), std::out_of_range);
}

TEST(MusculotendonLength, AnalyticIntegral) {
  JointModel model;
  model.muscles = {{"M", {0.015}, 0.30}};
  EXPECT_NEAR(myodyn::musculotendon_length(0.2, model.muscles[0], model), 0.297, 1e-15);
  EXPECT_DOUBLE_EQ(myodyn::musculotendon_length(0.0, model.muscles[0], model), 0.30);
}

TEST(MusculotendonLength, DerivativeIsNegativeMomentArm) {
  JointModel model;
  model.muscles = {{"M", {0.0151, -0.0023, 0.0007, 0.0004}, 0.28}};
  const auto& geo = model.muscles[0];
  const double h = 1e-6;
  for (double q : {-1.2, -0.4, 0.0, 0.3, 0.9, 1.4}) {
    const double fd = (myodyn::musculotendon_length(q + h, geo, model) -
                       myodyn::musculotendon_length(q - h, geo, model)) /
                      (2 * h);
    const double r = myodyn::moment_arm(q, geo, model);
    EXPECT_NEAR(fd, -r, 1e-8 * (1.0 + std::abs(r)));
  }
}

TEST(FiberVelocity, StationaryAndCollapsedChain) {
  auto model = two_muscle_model();
  auto params = two_muscle_params();
  anchor_geometry(model, params);

  EXPECT_DOUBLE_EQ(
      myodyn::fiber_velocity(0.3, 0.0, model.muscles[0], params[0], model), 0.0);

  // Zero pennation collapses the chain rule to v = -r(q) qdot.
  const double q = 0.25, qdot = 1.7;
  const double v = myodyn::fiber_velocity(q, qdot, model.muscles[1], params[1], model);
  const double r = myodyn::moment_arm(q, model.muscles[1], model);
  EXPECT_NEAR(v, -r * qdot, 1e-12);
}

TEST(FiberVelocity, MatchesTimeDerivativeOfFiberLength) {
  auto model = two_muscle_model();
  auto params = two_muscle_params();
  anchor_geometry(model, params);
  // Along q(t) = 0.3 sin(2t): central difference of lm over time.
  auto lm_at = [&](double t) {
    const double q = 0.3 * std::sin(2.0 * t);
    const double lmt = myodyn::musculotendon_length(q, model.muscles[0], model);
    return myodyn::fiber_length(lmt, params[0]).lm;
  };
  const double t0 = 0.4, h = 1e-5;
  const double q = 0.3 * std::sin(2.0 * t0);
  const double qdot = 0.6 * std::cos(2.0 * t0);
  const double v = myodyn::fiber_velocity(q, qdot, model.muscles[0], params[0], model);
  const double fd = (lm_at(t0 + h) - lm_at(t0 - h)) / (2 * h);
  EXPECT_NEAR(v, fd, 1e-6 * (1.0 + std::abs(fd)));
}

TEST(JointTorque, ZeroSymmetryAndDirect) {
  auto model = two_muscle_model();
  auto params = two_muscle_params();
  anchor_geometry(model, params);

  // No excitation at optimal length: no torque, no forces.
  const std::vector<double> zero{0.0, 0.0};
  auto res = myodyn::joint_torque(std::span<const double>(zero), 0.0, 0.0,
                                  std::span<const MuscleParams>(params), -2.0, model);
  EXPECT_DOUBLE_EQ(res.tau, 0.0);
  for (double f : res.forces) EXPECT_DOUBLE_EQ(f, 0.0);

  // Two muscles with equal force and opposite arms cancel.
  JointModel sym = model;
  sym.muscles[0].arm_coeffs = {0.015};
  sym.muscles[1].arm_coeffs = {-0.015};
  auto p2 = params;
  p2[1] = p2[0];
  anchor_geometry(sym, p2);
  const std::vector<double> same{0.4, 0.4};
  res = myodyn::joint_torque(std::span<const double>(same), 0.0, 0.0,
                             std::span<const MuscleParams>(p2), -2.0, sym);
  EXPECT_NEAR(res.tau, 0.0, 1e-12);
  EXPECT_NEAR(res.forces[0], res.forces[1], 1e-12);

  // Single muscle, Fmt = 100 N at r = 0.015 m -> 1.5 N m.
  EXPECT_NEAR(100.0 * 0.015, 1.5, 1e-15);
}

TEST(AngularAcceleration, Cases) {
  JointModel model = two_muscle_model();
  EXPECT_DOUBLE_EQ(myodyn::angular_acceleration(0.0, JointState{0.0, 0.0}, model), 0.0);

  const double q = 0.4;
  const double tau = model.gravity_torque_scale() * std::sin(q);
  EXPECT_NEAR(myodyn::angular_acceleration(tau, JointState{q, 0.0}, model), 0.0, 1e-12);

  JointModel direct = model;
  direct.m = 0.0;
  direct.L = 0.0;
  direct.Ip = 0.01;
  direct.C = 0.0;
  EXPECT_DOUBLE_EQ(myodyn::angular_acceleration(1.0, JointState{0.0, 0.0}, direct), 100.0);
}

TEST(Simulate, HangingEquilibriumIsFixedPoint) {
  auto model = two_muscle_model();
  auto params = two_muscle_params();
  anchor_geometry(model, params);
  auto quiet = [](double) { return std::vector<double>{0.0, 0.0}; };
  auto traj = myodyn::simulate(quiet, model, params, ActivationShape{-2.0}, 0.0, 0.0,
                               1e-3, 0.5);
  for (const auto& s : traj.states) {
    EXPECT_NEAR(s.q, 0.0, 1e-12);
    EXPECT_NEAR(s.qdot, 0.0, 1e-12);
  }
}

TEST(Simulate, ReleasedPendulumDissipatesEnergy) {
  auto model = two_muscle_model();
  auto params = two_muscle_params();
  anchor_geometry(model, params, 0.97);  // fibers stay below optimal length
  auto quiet = [](double) { return std::vector<double>{0.0, 0.0}; };
  auto traj = myodyn::simulate(quiet, model, params, ActivationShape{-2.0}, 0.1, 0.0,
                               1e-3, 1.0);
  double prev = myodyn::pendulum_energy(traj.states.front(), model);
  for (size_t i = 1; i < traj.states.size(); ++i) {
    const double e = myodyn::pendulum_energy(traj.states[i], model);
    EXPECT_LE(e, prev + 1e-12) << "step " << i;
    prev = e;
  }
}

// Gentle monotone push: the angular velocity keeps one sign and fibers stay
// short of optimal length, so the dynamics are smooth along the path and the
// integrator shows clean fourth-order self-convergence.
std::vector<double> smooth_push(double t) {
  const double s = 0.5 - 0.5 * std::cos(M_PI * std::min(t, 1.0));
  return {0.04 * s, 0.048 * s};
}

TEST(Simulate, Rk4SelfConvergence) {
  auto model = two_muscle_model();
  auto params = two_muscle_params();
  anchor_geometry(model, params, 0.97);
  const ActivationShape shape{-2.0};
  auto qend = [&](double dt) {
    return myodyn::simulate(smooth_push, model, params, shape, 0.0, 0.0, dt, 1.0)
        .states.back().q;
  };
  const double qref = qend(2e-4);
  const double ratio = std::abs(qend(2e-3) - qref) / std::abs(qend(1e-3) - qref);
  EXPECT_GE(ratio, 12.0);
  EXPECT_LE(ratio, 20.0);
}

TEST(Simulate, ResidualOfRecordedTrajectory) {
  auto model = two_muscle_model();
  auto params = two_muscle_params();
  anchor_geometry(model, params, 0.97);
  auto traj = myodyn::simulate(smooth_push, model, params, ActivationShape{-2.0}, 0.0, 0.0,
                               1e-3, 1.0);

  // With qddot from the equation of motion the residual is zero by
  // construction; with qddot from central differences it stays < 1e-4.
  const double I = model.inertia();
  for (size_t i = 1; i + 1 < traj.states.size(); ++i) {
    const double qdd_eq = myodyn::angular_acceleration(traj.torque[i], traj.states[i], model);
    const double res_eq = I * qdd_eq + model.C * traj.states[i].qdot +
                          model.gravity_torque_scale() * std::sin(traj.states[i].q) -
                          traj.torque[i];
    EXPECT_NEAR(res_eq, 0.0, 1e-12);

    const double qdd_fd = (traj.states[i + 1].q - 2.0 * traj.states[i].q +
                           traj.states[i - 1].q) /
                          (traj.dt * traj.dt);
    const double res_fd = I * qdd_fd + model.C * traj.states[i].qdot +
                          model.gravity_torque_scale() * std::sin(traj.states[i].q) -
                          traj.torque[i];
    EXPECT_NEAR(res_fd, 0.0, 1e-4);
  }
}

TEST(JointTorque, LinearInMaxIsometricForce) {
  auto model = two_muscle_model();
  auto params = two_muscle_params();
  anchor_geometry(model, params);
  const std::vector<double> e{0.5, 0.3};
  const double q = 0.2, qdot = -0.5;
  auto base = myodyn::joint_torque(std::span<const double>(e), q, qdot,
                                   std::span<const MuscleParams>(params), -2.0, model);
  auto scaled_params = params;
  const double s = 1.7;
  scaled_params[0].f0 *= s;
  auto scaled = myodyn::joint_torque(std::span<const double>(e), q, qdot,
                                     std::span<const MuscleParams>(scaled_params), -2.0,
                                     model);
  EXPECT_NEAR(scaled.forces[0], s * base.forces[0], 1e-9 * s * base.forces[0]);
  EXPECT_NEAR(scaled.forces[1], base.forces[1], 1e-12);
}

TEST(Simulate, DiagnosticsNameMuscleAndTime) {
  auto model = two_muscle_model();
  auto params = two_muscle_params();
  anchor_geometry(model, params);
  params[0].l_slack = 0.32;  // slack beyond lmt_ref: immediately invalid
  auto quiet = [](double) { return std::vector<double>{0.0, 0.0}; };
  try {
    myodyn::simulate(quiet, model, params, ActivationShape{-2.0}, 0.0, 0.0, 1e-3, 0.1);
    FAIL() << "expected domain error";
  } catch (const std::domain_error& ex) {
    const std::string what = ex.what();
    EXPECT_NE(what.find("FLEX"), std::string::npos) << what;
    EXPECT_NE(what.find("t="), std::string::npos) << what;
  }
}

TEST(ValidateGeometry, RejectsSlackBeyondRange) {
  auto model = two_muscle_model();
  auto params = two_muscle_params();
  anchor_geometry(model, params);
  EXPECT_NO_THROW(myodyn::validate_geometry(model, params));
  params[1].l_slack = 0.5;
  EXPECT_THROW(myodyn::validate_geometry(model, params), std::invalid_argument);
}

}  // namespace
