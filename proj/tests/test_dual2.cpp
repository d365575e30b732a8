#include "myodyn/dual2.hpp"

#include <cmath>
#include <functional>
#include <vector>

#include "gtest/gtest.h"

namespace {

using myodyn::Dual2;

// 5-point central stencils for first and second derivatives.
void expect_matches_stencil(const std::function<double(double)>& f, double t,
                            const Dual2& d, double tol) {
  const double h = 1e-3;
  const double fm2 = f(t - 2 * h), fm1 = f(t - h), f0 = f(t), fp1 = f(t + h),
               fp2 = f(t + 2 * h);
  const double d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h);
  const double d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h);
  EXPECT_NEAR(d.v, f0, 1e-12) << "value mismatch";
  EXPECT_NEAR(d.d1, d1, tol * (1.0 + std::abs(d1))) << "first tangent";
  EXPECT_NEAR(d.d2, d2, tol * (1.0 + std::abs(d2))) << "second tangent";
}

TEST(Dual2, ProductRule) {
  // (fg)'' = f''g + 2f'g' + fg''
  const Dual2 f{2.0, 3.0, 4.0};
  const Dual2 g{5.0, 7.0, 11.0};
  const Dual2 p = f * g;
  EXPECT_DOUBLE_EQ(p.v, 10.0);
  EXPECT_DOUBLE_EQ(p.d1, 3.0 * 5.0 + 2.0 * 7.0);
  EXPECT_DOUBLE_EQ(p.d2, 4.0 * 5.0 + 2.0 * 3.0 * 7.0 + 2.0 * 11.0);
}

TEST(Dual2, DivisionConsistentWithProduct) {
  const Dual2 u{2.0, 3.0, 4.0};
  const Dual2 w{5.0, 7.0, 11.0};
  const Dual2 q = u / w;
  const Dual2 back = q * w;
  EXPECT_NEAR(back.v, u.v, 1e-14);
  EXPECT_NEAR(back.d1, u.d1, 1e-14);
  EXPECT_NEAR(back.d2, u.d2, 1e-13);
}

TEST(Dual2, SinAtZeroSeed) {
  const Dual2 s = sin(Dual2::seed(0.0));
  EXPECT_DOUBLE_EQ(s.v, 0.0);
  EXPECT_DOUBLE_EQ(s.d1, 1.0);
  EXPECT_DOUBLE_EQ(s.d2, 0.0);
}

TEST(Dual2, Atan2RecoversAngle) {
  // atan2(sin t, cos t) = t, so tangents must be (1, 0).
  for (double t : {-1.2, -0.3, 0.4, 1.1}) {
    const Dual2 x = Dual2::seed(t);
    const Dual2 a = atan2(sin(x), cos(x));
    EXPECT_NEAR(a.v, t, 1e-14);
    EXPECT_NEAR(a.d1, 1.0, 1e-12);
    EXPECT_NEAR(a.d2, 0.0, 1e-11);
  }
}

TEST(Dual2, UnaryFunctionsMatchStencils) {
  using std::exp;
  using std::log;
  using std::sin;
  using std::cos;
  using std::tanh;
  using std::sqrt;
  using std::asin;
  struct Case {
    std::function<Dual2(Dual2)> lifted;
    std::function<double(double)> plain;
    double at;
  };
  const std::vector<Case> cases = {
      {[](Dual2 x) { return exp(x); }, [](double x) { return exp(x); }, 0.7},
      {[](Dual2 x) { return log(x); }, [](double x) { return log(x); }, 1.3},
      {[](Dual2 x) { return sin(x); }, [](double x) { return sin(x); }, 0.9},
      {[](Dual2 x) { return cos(x); }, [](double x) { return cos(x); }, -0.4},
      {[](Dual2 x) { return tanh(x); }, [](double x) { return tanh(x); }, 0.5},
      {[](Dual2 x) { return sqrt(x); }, [](double x) { return sqrt(x); }, 2.1},
      {[](Dual2 x) { return asin(x); }, [](double x) { return asin(x); }, 0.3},
      {[](Dual2 x) { return myodyn::softplus(x); },
       [](double x) { return myodyn::softplus(x); }, -0.8},
      {[](Dual2 x) { return myodyn::logistic(x); },
       [](double x) { return myodyn::logistic(x); }, 0.6},
      {[](Dual2 x) { return sq(x); }, [](double x) { return x * x; }, 1.7},
  };
  for (const auto& c : cases)
    expect_matches_stencil(c.plain, c.at, c.lifted(Dual2::seed(c.at)), 1e-6);
}

TEST(Dual2, CompositionMatchesStencil) {
  auto plain = [](double t) {
    return std::exp(std::sin(2.0 * t)) / (1.0 + t * t) - std::tanh(t) * std::sqrt(t + 2.0);
  };
  auto lifted = [](Dual2 t) {
    return exp(sin(2.0 * t)) / (1.0 + t * t) - tanh(t) * sqrt(t + 2.0);
  };
  for (double t : {-0.7, 0.0, 0.31, 1.4})
    expect_matches_stencil(plain, t, lifted(Dual2::seed(t)), 1e-5);
}

}  // namespace
