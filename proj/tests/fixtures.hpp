#pragma once

// Hand-built systems used across the test suites: three known-answer
// diffusions with closed-form adjoint images, and the degree-3 controller
// synthesis plant.

#include "agstab/ops.hpp"

namespace fixtures {

using namespace agstab;

inline Polynomial var(std::size_t n, std::size_t i) {
  return Polynomial::variable(n, i);
}
inline Polynomial cst(std::size_t n, const Rational& r) {
  return Polynomial::constant(n, r);
}

// dx = (x^2 - 2x - z^2) dt + x dW, dz = 2z(x - 1) dt + z dW.
// With D = (x^2+z^2)^-2 the adjoint image is -3 (x^2+z^2)^-2.
struct Example1 {
  Polynomial b;
  SdeSystem sys;
  BExpr density;
  BExpr expected;

  Example1()
      : b(var(2, 0) * var(2, 0) + var(2, 1) * var(2, 1)),
        sys(make_system(b)),
        density(b, cst(2, 1), Rational(-2)),
        expected(b, cst(2, -3), Rational(-2)) {}

  static SdeSystem make_system(const Polynomial& b) {
    auto x = var(2, 0), z = var(2, 1);
    std::vector<BExpr> drift{
        BExpr::from_polynomial(b, x * x - x.scaled(Rational(2)) - z * z),
        BExpr::from_polynomial(b, (z * x - z).scaled(Rational(2)))};
    std::vector<std::vector<BExpr>> noise{
        {BExpr::from_polynomial(b, x), BExpr::from_polynomial(b, z)}};
    return SdeSystem(std::move(drift), std::move(noise), true);
  }
};

// dx = 12(2z-1)xz dt - x/2 dt + (1-2z)x dW
// dy = -y/2 dt + (1-2z)y dW
// dz = -12 z x^2 dt + 2(1-z)z dW
// With D = z^-2 the adjoint image is -12 x^2 z^-2; the open ellipsoid
// {2z - 2z^2 - x^2 - y^2 > 0} is backward invariant.
struct Example2 {
  Polynomial b;  // base z
  SdeSystem sys;
  BExpr density;
  BExpr expected;
  Polynomial invariant_set;  // g >= 0 constraint

  Example2()
      : b(var(3, 2)),
        sys(make_system(b)),
        density(b, cst(3, 1), Rational(-2)),
        expected(b, (var(3, 0) * var(3, 0)).scaled(Rational(-12)), Rational(-2)),
        invariant_set(var(3, 2).scaled(Rational(2)) -
                      (var(3, 2) * var(3, 2)).scaled(Rational(2)) -
                      var(3, 0) * var(3, 0) - var(3, 1) * var(3, 1)) {}

  static SdeSystem make_system(const Polynomial& b) {
    auto x = var(3, 0), y = var(3, 1), z = var(3, 2);
    Polynomial half(cst(3, Rational(1, 2)));
    std::vector<BExpr> drift{
        BExpr::from_polynomial(
            b, (x * z * z).scaled(Rational(24)) - (x * z).scaled(Rational(12)) -
                   x.scaled(Rational(1, 2))),
        BExpr::from_polynomial(b, -y.scaled(Rational(1, 2))),
        BExpr::from_polynomial(b, (z * x * x).scaled(Rational(-12)))};
    std::vector<std::vector<BExpr>> noise{
        {BExpr::from_polynomial(b, x - (x * z).scaled(Rational(2))),
         BExpr::from_polynomial(b, y - (y * z).scaled(Rational(2))),
         BExpr::from_polynomial(b, z.scaled(Rational(2)) -
                                       (z * z).scaled(Rational(2)))}};
    return SdeSystem(std::move(drift), std::move(noise), true);
  }
};

// dp = (3/2 + 20/(2+p^2)) p dt - p dW.  With D = sqrt(2+p^2) the adjoint
// image is -42 (2+p^2)^(-3/2); trajectories escape to infinity.
struct Example3 {
  Polynomial b;  // 2 + p^2
  SdeSystem sys;
  BExpr density;
  BExpr expected;

  Example3()
      : b(var(1, 0) * var(1, 0) + cst(1, 2)),
        sys(make_system(b)),
        density(b, cst(1, 1), Rational(1, 2)),
        expected(b, cst(1, -42), Rational(-3, 2)) {}

  static SdeSystem make_system(const Polynomial& b) {
    auto p = var(1, 0);
    BExpr drift = BExpr(b, p.scaled(Rational(3, 2)), Rational(0)) +
                  BExpr(b, p.scaled(Rational(20)), Rational(-1));
    std::vector<std::vector<BExpr>> noise{{BExpr::from_polynomial(b, -p)}};
    return SdeSystem({drift}, std::move(noise), true);
  }
};

// Controlled plant for degree-3 feedback synthesis:
//   dx = (2x^3 + x^2 y - 6x y^2 + 5y^3) dt + (x^2+y^2) dW
//   dy = u dt - (x^2+y^2) dW
struct ControlPlant {
  Polynomial b;  // x^2 + y^2
  SdeSystem sys;
  std::vector<BExpr> control;  // channel multiplying u

  ControlPlant()
      : b(var(2, 0) * var(2, 0) + var(2, 1) * var(2, 1)),
        sys(make_system(b)),
        control{BExpr::from_polynomial(b, Polynomial(2)),
                BExpr::from_polynomial(b, cst(2, 1))} {}

  static Polynomial drift_x() {
    auto x = var(2, 0), y = var(2, 1);
    return (x * x * x).scaled(Rational(2)) + x * x * y -
           (x * y * y).scaled(Rational(6)) + (y * y * y).scaled(Rational(5));
  }
  static SdeSystem make_system(const Polynomial& b) {
    std::vector<BExpr> drift{BExpr::from_polynomial(b, drift_x()),
                             BExpr::from_polynomial(b, Polynomial(2))};
    std::vector<std::vector<BExpr>> noise{
        {BExpr::from_polynomial(b, b), BExpr::from_polynomial(b, -b)}};
    return SdeSystem(std::move(drift), std::move(noise), true);
  }

  // The published degree-3 feedback (2 significant figures).
  static Polynomial published_u() {
    auto x = var(2, 0), y = var(2, 1);
    return (x * x * x).scaled(Rational(-27, 10)) +
           (x * x * y).scaled(Rational(23, 5)) +
           (x * y * y).scaled(Rational(-67, 10)) +
           (y * y * y).scaled(Rational(-17, 5));
  }
  // The published closed-loop sextic, same rounding.
  static Polynomial published_sextic() {
    auto x = var(2, 0), y = var(2, 1);
    auto m = [&](int i, int j) {
      Monomial mm(2);
      mm[0] = i;
      mm[1] = j;
      return mm;
    };
    Polynomial p(2);
    p.set(m(0, 6), Rational(35, 100));
    p.set(m(1, 5), Rational(-15, 10000));
    p.set(m(2, 4), Rational(6, 10));
    p.set(m(3, 3), Rational(26, 10000));
    p.set(m(4, 2), Rational(33, 100));
    p.set(m(5, 1), Rational(4, 1000));
    p.set(m(6, 0), Rational(13, 100));
    return p;
  }
};

}  // namespace fixtures
