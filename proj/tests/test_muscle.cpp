#include "myodyn/muscle.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "myodyn/tape.hpp"

namespace {

using myodyn::Dual2;
using myodyn::MuscleConstants;
using myodyn::MuscleParams;

MuscleParams fcr_params() {
  // Wrist flexor (FCR) reference values.
  return {0.062, 0.62, 407.0, 0.24, 0.05};
}

TEST(Activation, EndpointIdentities) {
  for (double A : {-3.0, -2.29, -1.0, -0.1, 0.01}) {
    EXPECT_DOUBLE_EQ(myodyn::activation(0.0, A), 0.0) << "A=" << A;
    EXPECT_NEAR(myodyn::activation(1.0, A), 1.0, 1e-15) << "A=" << A;
  }
}

TEST(Activation, FrozenMidpointValue) {
  // (exp(-2.29*0.5)-1)/(exp(-2.29)-1) from a high-precision scalar evaluation.
  EXPECT_NEAR(myodyn::activation(0.5, -2.29), 0.758596461878935, 1e-9);
}

TEST(Activation, MonotoneAndLimitBranch) {
  for (double A : {-3.0, -2.0, -0.5, -1e-6, 1e-6, 0.01}) {
    double prev = -1.0;
    for (int i = 0; i <= 50; ++i) {
      const double e = i / 50.0;
      const double a = myodyn::activation(e, A);
      EXPECT_GT(a, prev) << "A=" << A << " e=" << e;
      prev = a;
    }
  }
  // The limit branch differs from the exact formula by < 1e-6 at |A| = 1e-6.
  for (double A : {-1e-6, 1e-6}) {
    for (double e : {0.1, 0.5, 0.9}) {
      const double exact = (std::exp(A * e) - 1.0) / (std::exp(A) - 1.0);
      EXPECT_NEAR(myodyn::activation(e, A), exact, 1e-6);
    }
  }
}

TEST(Activation, DomainErrors) {
  EXPECT_THROW(myodyn::activation(-0.01, -2.0), std::domain_error);
  EXPECT_THROW(myodyn::activation(1.01, -2.0), std::domain_error);
  EXPECT_THROW(myodyn::activation(0.5, -3.5), std::domain_error);
  EXPECT_THROW(myodyn::activation(0.5, 0.5), std::domain_error);
  EXPECT_NO_THROW(myodyn::activation(1.0 + 1e-10, -2.0));  // float slop tolerated
}

TEST(Pennation, Identities) {
  MuscleParams p = fcr_params();
  p.phi0 = 0.0;
  EXPECT_DOUBLE_EQ(myodyn::pennation(0.05, p), 0.0);
  p = fcr_params();
  EXPECT_DOUBLE_EQ(myodyn::pennation(p.l0, p), p.phi0);
}

TEST(Pennation, ThreeFourFiveTriangle) {
  // l0 sin(phi0) = 0.04 and lm = 0.05 gives arcsin(0.8).
  MuscleParams p = fcr_params();
  p.l0 = 0.08;
  p.phi0 = std::asin(0.5);
  EXPECT_NEAR(myodyn::pennation(0.05, p), 0.9272952180016122, 1e-12);
  EXPECT_THROW(myodyn::pennation(0.039, p), std::domain_error);
}

TEST(FiberLength, TendonSubtractionAndPythagoras) {
  MuscleParams p = fcr_params();
  p.phi0 = 0.0;
  p.l_slack = 0.24;
  auto kin = myodyn::fiber_length(0.30, p);
  EXPECT_NEAR(kin.lm, 0.06, 1e-15);
  EXPECT_DOUBLE_EQ(kin.phi, 0.0);

  p.l0 = 0.08;
  p.phi0 = std::asin(0.5);  // w = 0.04
  kin = myodyn::fiber_length(p.l_slack + 0.03, p);
  EXPECT_NEAR(kin.lm, 0.05, 1e-15);
}

TEST(FiberLength, ClosedFormSatisfiesBothRelations) {
  const MuscleParams p = fcr_params();
  const double w = p.l0 * std::sin(p.phi0);
  for (double lmt : {0.302, 0.28, 0.31, 0.2401}) {
    auto kin = myodyn::fiber_length(lmt, p);
    EXPECT_NEAR(kin.lm * std::cos(kin.phi), lmt - p.l_slack,
                1e-12 * std::abs(lmt - p.l_slack));
    EXPECT_NEAR(kin.lm * std::sin(kin.phi), w, 1e-12 * w);
  }
  EXPECT_THROW(myodyn::fiber_length(0.24, p), std::domain_error);
  EXPECT_THROW(myodyn::fiber_length(0.2, p), std::domain_error);
}

TEST(FiberLength, FrozenFcrValues) {
  const MuscleParams p = fcr_params();
  auto kin = myodyn::fiber_length(0.302, p);
  EXPECT_NEAR(kin.lm, 0.0620773871416608, 1e-12);
  EXPECT_NEAR(kin.phi, 0.0499376169179921, 1e-12);
}

TEST(ForceLengthActive, PeakAndFrozenValue) {
  const MuscleParams p = fcr_params();
  const MuscleConstants c;
  // lbar = 1 at lm = l0 (lambda(1-a)+1) for any activation.
  for (double a : {0.0, 0.3, 1.0}) {
    const double lm = p.l0 * (c.lambda * (1.0 - a) + 1.0);
    EXPECT_DOUBLE_EQ(myodyn::force_length_active(lm, a, p, c), 1.0);
  }
  // lbar = 0.7 -> exp(-0.09/0.45) = exp(-0.2).
  const double lm = 0.7 * p.l0;
  EXPECT_NEAR(myodyn::force_length_active(lm, 1.0, p, c), 0.818730753077982, 1e-12);
}

TEST(ForceLengthActive, MaximumExactlyAtOptimal) {
  const MuscleParams p = fcr_params();
  const MuscleConstants c;
  const double a = 0.4;
  const double lpeak = p.l0 * (c.lambda * (1.0 - a) + 1.0);
  const double peak = myodyn::force_length_active(lpeak, a, p, c);
  for (int i = -25; i <= 25; ++i) {
    if (i == 0) continue;
    const double lm = lpeak * (1.0 + 0.02 * i);
    EXPECT_LT(myodyn::force_length_active(lm, a, p, c), peak);
  }
}

TEST(ForceVelocity, BranchesAndContinuity) {
  EXPECT_DOUBLE_EQ(myodyn::force_velocity(0.0), 1.0);
  EXPECT_DOUBLE_EQ(myodyn::force_velocity(-1.0), 0.0);
  EXPECT_NEAR(myodyn::force_velocity(0.5), 1.75471698113208, 1e-12);
  // Left and right limits at 0 agree.
  EXPECT_NEAR(myodyn::force_velocity(-1e-13), myodyn::force_velocity(1e-13), 1e-11);
  EXPECT_THROW(myodyn::force_velocity(-1.0001), std::domain_error);
}

TEST(ForceVelocity, MonotoneNondecreasing) {
  double prev = -1.0;
  for (int i = 0; i <= 400; ++i) {
    const double vbar = -1.0 + 4.0 * i / 400.0;
    const double fv = myodyn::force_velocity(vbar);
    EXPECT_GE(fv, prev - 1e-12) << "vbar=" << vbar;
    EXPECT_GE(fv, 0.0);
    prev = fv;
  }
}

TEST(ForcePassive, BelowAboveAndFrozen) {
  const MuscleParams p = fcr_params();
  EXPECT_DOUBLE_EQ(myodyn::force_passive(0.9 * p.l0, p), 0.0);
  // lbar = 1.5 makes the exponents cancel: F_PE = F0m.
  EXPECT_NEAR(myodyn::force_passive(1.5 * p.l0, p), p.f0, 1e-9);
  // lbar = 1.2 with F0m = 407.
  EXPECT_NEAR(myodyn::force_passive(1.2 * p.l0, p), 20.2633368257206, 1e-9);
}

TEST(MuscleTendonForce, ComposedCases) {
  MuscleParams p = fcr_params();
  p.phi0 = 0.0;
  const MuscleConstants c;

  // No activation at or below optimal length: no force at all.
  myodyn::MuscleKinematicsT<double> kin{p.l0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(myodyn::muscle_tendon_force(0.0, kin, p, c), 0.0);

  // All factors unity.
  kin = {p.l0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(myodyn::muscle_tendon_force(1.0, kin, p, c), p.f0);

  // a=0.5 with the activation-adjusted normalized length at 1: the active
  // part is 0.5 * 1.754717 * 1 * 100 = 87.7358..., and because lm = 1.075 l0
  // the passive element adds 100 exp(0.75 - 5) = 1.426423...
  p.f0 = 100.0;
  const double a = 0.5;
  kin = {p.l0 * (c.lambda * (1.0 - a) + 1.0), 0.0, 0.5 * p.v_max};
  EXPECT_NEAR(myodyn::muscle_tendon_force(a, kin, p, c),
              87.7358490566038 + 1.42642339089988, 1e-9);
}

TEST(MuscleTendonForce, NonnegativeProperty) {
  const MuscleConstants c;
  std::mt19937_64 rng(42);
  auto unit = [&] { return (rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < 500; ++i) {
    MuscleParams p;
    p.l0 = 0.03 + 0.07 * unit();
    p.v_max = 10.0 * p.l0;
    p.f0 = 100.0 + 500.0 * unit();
    p.l_slack = 0.1 + 0.2 * unit();
    p.phi0 = 0.4 * unit();
    const double lmt = p.l_slack + (0.2 + 1.6 * unit()) * p.l0;
    auto kin = myodyn::fiber_length(lmt, p);
    kin.v = (-1.0 + 3.0 * unit()) * p.v_max;
    const double a = unit();
    EXPECT_GE(myodyn::muscle_tendon_force(a, kin, p, c), 0.0);
  }
}

// Every curve accepts Dual2 inputs; propagated tangents match central
// finite differences in the seeding variable.
TEST(MuscleCurves, Dual2TangentsMatchFiniteDifferences) {
  const MuscleParams p = fcr_params();
  const MuscleConstants c;
  const double h = 1e-5;

  auto check = [&](auto f, double x0) {
    const Dual2 d = f(Dual2::seed(x0));
    const double fd = (myodyn::val(f(Dual2(x0 + h))) - myodyn::val(f(Dual2(x0 - h)))) / (2 * h);
    EXPECT_NEAR(d.d1, fd, 1e-5 * (1.0 + std::abs(fd)));
  };

  check([&](Dual2 e) { return myodyn::activation(e, -2.0); }, 0.42);
  check([&](Dual2 lm) { return myodyn::pennation(lm, p); }, 0.065);
  check([&](Dual2 lmt) { return myodyn::fiber_length(lmt, p).lm; }, 0.301);
  check([&](Dual2 lmt) { return myodyn::fiber_length(lmt, p).phi; }, 0.301);
  check([&](Dual2 lm) { return myodyn::force_length_active(lm, 0.6, p, c); }, 0.058);
  check([&](Dual2 vb) { return myodyn::force_velocity(vb); }, -0.4);
  check([&](Dual2 vb) { return myodyn::force_velocity(vb); }, 0.7);
  check([&](Dual2 lm) { return myodyn::force_passive(lm, p); }, 1.3 * p.l0);
}

// The same curves recorded on a tape: reverse-mode gradients match finite
// differences (away from the piecewise breakpoints).
TEST(MuscleCurves, TapeGradientsMatchFiniteDifferences) {
  const MuscleParams p = fcr_params();
  const MuscleConstants c;
  auto f = [&](myodyn::Tape& tape, const std::vector<myodyn::Var>& v) {
    auto kin = myodyn::fiber_length(v[0], p);
    kin.v = v[1] * 1.0;
    auto a = myodyn::activation(v[2], v[3]);
    return myodyn::muscle_tendon_force(a, kin, p, c);
  };
  auto report = myodyn::grad_check(f, {0.301, -0.1, 0.42, -1.7}, 1e-6, 1e-5);
  EXPECT_TRUE(report.passed()) << "max rel err " << report.max_rel_err;
}

TEST(MuscleParams, TableDefaultsSatisfyVelocityRule) {
  // v0 = 10 * l0m for every reference muscle row.
  const std::vector<std::pair<double, double>> rows = {
      {0.062, 0.62}, {0.051, 0.51}, {0.081, 0.81}, {0.058, 0.58}, {0.062, 0.62}};
  for (const auto& [l0, v0] : rows) EXPECT_NEAR(v0, 10.0 * l0, 1e-12);
}

TEST(MuscleParams, ValidationRejectsBadValues) {
  MuscleParams p = fcr_params();
  p.l0 = -0.01;
  EXPECT_THROW(myodyn::validate(p, "test"), std::domain_error);
  p = fcr_params();
  p.phi0 = 1.6;
  EXPECT_THROW(myodyn::validate(p, "test"), std::domain_error);
  EXPECT_NO_THROW(myodyn::validate(fcr_params(), "test"));
}

}  // namespace
