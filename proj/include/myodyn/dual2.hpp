#pragma once

#include <cmath>

namespace myodyn {

// Second-order forward-mode number: value plus first and second tangent
// with respect to one scalar (here: time). d2 carries the actual second
// derivative, not the Taylor coefficient.
struct Dual2 {
  double v = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  constexpr Dual2() = default;
  constexpr Dual2(double value) : v(value) {}
  constexpr Dual2(double value, double first, double second)
      : v(value), d1(first), d2(second) {}

  static constexpr Dual2 seed(double t) { return {t, 1.0, 0.0}; }
};

constexpr Dual2 operator+(Dual2 a, Dual2 b) {
  return {a.v + b.v, a.d1 + b.d1, a.d2 + b.d2};
}
constexpr Dual2 operator-(Dual2 a, Dual2 b) {
  return {a.v - b.v, a.d1 - b.d1, a.d2 - b.d2};
}
constexpr Dual2 operator-(Dual2 a) { return {-a.v, -a.d1, -a.d2}; }

// (fg)'' = f''g + 2f'g' + fg''
constexpr Dual2 operator*(Dual2 a, Dual2 b) {
  return {a.v * b.v, a.d1 * b.v + a.v * b.d1,
          a.d2 * b.v + 2.0 * a.d1 * b.d1 + a.v * b.d2};
}

// q = u/w via u = q*w: q' = (u' - q w')/w, q'' = (u'' - q w'' - 2 q' w')/w
constexpr Dual2 operator/(Dual2 u, Dual2 w) {
  const double qv = u.v / w.v;
  const double q1 = (u.d1 - qv * w.d1) / w.v;
  const double q2 = (u.d2 - qv * w.d2 - 2.0 * q1 * w.d1) / w.v;
  return {qv, q1, q2};
}

constexpr Dual2 operator+(Dual2 a, double b) { return {a.v + b, a.d1, a.d2}; }
constexpr Dual2 operator+(double a, Dual2 b) { return b + a; }
constexpr Dual2 operator-(Dual2 a, double b) { return {a.v - b, a.d1, a.d2}; }
constexpr Dual2 operator-(double a, Dual2 b) { return {a - b.v, -b.d1, -b.d2}; }
constexpr Dual2 operator*(Dual2 a, double b) { return {a.v * b, a.d1 * b, a.d2 * b}; }
constexpr Dual2 operator*(double a, Dual2 b) { return b * a; }
constexpr Dual2 operator/(Dual2 a, double b) { return {a.v / b, a.d1 / b, a.d2 / b}; }
constexpr Dual2 operator/(double a, Dual2 b) { return Dual2(a) / b; }

// Chain rule through a scalar map given g, g', g'' at x.v.
constexpr Dual2 chain(Dual2 x, double g, double dg, double ddg) {
  return {g, dg * x.d1, dg * x.d2 + ddg * x.d1 * x.d1};
}

inline Dual2 exp(Dual2 x) {
  const double e = std::exp(x.v);
  return chain(x, e, e, e);
}
inline Dual2 log(Dual2 x) {
  return chain(x, std::log(x.v), 1.0 / x.v, -1.0 / (x.v * x.v));
}
inline Dual2 sin(Dual2 x) {
  const double s = std::sin(x.v), c = std::cos(x.v);
  return chain(x, s, c, -s);
}
inline Dual2 cos(Dual2 x) {
  const double s = std::sin(x.v), c = std::cos(x.v);
  return chain(x, c, -s, -c);
}
inline Dual2 tanh(Dual2 x) {
  const double u = std::tanh(x.v);
  return chain(x, u, 1.0 - u * u, -2.0 * u * (1.0 - u * u));
}
inline double logistic(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}
inline Dual2 logistic(Dual2 x) {
  const double s = logistic(x.v);
  return chain(x, s, s * (1.0 - s), s * (1.0 - s) * (1.0 - 2.0 * s));
}
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}
inline Dual2 softplus(Dual2 x) {
  const double s = logistic(x.v);
  return chain(x, softplus(x.v), s, s * (1.0 - s));
}
inline Dual2 sqrt(Dual2 x) {
  const double r = std::sqrt(x.v);
  return chain(x, r, 0.5 / r, -0.25 / (x.v * r));
}
inline Dual2 asin(Dual2 x) {
  const double s = 1.0 / std::sqrt(1.0 - x.v * x.v);
  return chain(x, std::asin(x.v), s, x.v * s * s * s);
}
inline Dual2 sq(Dual2 x) { return chain(x, x.v * x.v, 2.0 * x.v, 2.0); }

// theta' = (x y' - y x')/r2, theta'' = (x y'' - y x'')/r2 - theta' * (r2)'/r2
inline Dual2 atan2(Dual2 y, Dual2 x) {
  const double r2 = x.v * x.v + y.v * y.v;
  const double t1 = (x.v * y.d1 - y.v * x.d1) / r2;
  const double t2 =
      (x.v * y.d2 - y.v * x.d2) / r2 - t1 * 2.0 * (x.v * x.d1 + y.v * y.d1) / r2;
  return {std::atan2(y.v, x.v), t1, t2};
}

inline Dual2 atan2(double y, Dual2 x) { return atan2(Dual2(y), x); }
inline Dual2 atan2(Dual2 y, double x) { return atan2(y, Dual2(x)); }

// Uniform value access so numeric code can branch on double, Dual2 or Var.
constexpr double val(double x) { return x; }
constexpr double val(Dual2 x) { return x.v; }

constexpr double sq(double x) { return x * x; }

}  // namespace myodyn
