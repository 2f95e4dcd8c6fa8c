#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "fixtures.hpp"

using namespace agstab;
using namespace fixtures;

TEST_CASE("adjoint image of the planar quadratic system is -3 b^-2") {
  Example1 ex;
  BExpr lstar = adjoint_generator(ex.sys, ex.density);
  CHECK(lstar == ex.expected);
}

TEST_CASE("adjoint image of the ellipsoid system is -12 x^2 z^-2") {
  Example2 ex;
  BExpr lstar = adjoint_generator(ex.sys, ex.density);
  CHECK(lstar == ex.expected);
}

TEST_CASE("adjoint image of the projected scalar system is -42 b^-3/2") {
  Example3 ex;
  BExpr lstar = adjoint_generator(ex.sys, ex.density);
  CHECK(lstar == ex.expected);
}

TEST_CASE("scalar linear system: drift -x, noise x, D = x^-2 maps to -x^-2") {
  Polynomial b = var(1, 0) * var(1, 0);  // base x^2, so D = b^-1
  std::vector<BExpr> drift{BExpr::from_polynomial(b, -var(1, 0))};
  std::vector<std::vector<BExpr>> noise{{BExpr::from_polynomial(b, var(1, 0))}};
  SdeSystem sys(std::move(drift), std::move(noise), true);
  BExpr density(b, cst(1, 1), Rational(-1));
  CHECK(adjoint_generator(sys, density) == BExpr(b, cst(1, -1), Rational(-1)));
}

TEST_CASE("divergence-free rotation drift maps constants to zero") {
  Polynomial b = var(2, 0) * var(2, 0) + var(2, 1) * var(2, 1);
  std::vector<BExpr> drift{BExpr::from_polynomial(b, -var(2, 1)),
                           BExpr::from_polynomial(b, var(2, 0))};
  SdeSystem sys(std::move(drift), {}, false);
  BExpr one(b, cst(2, 1), Rational(0));
  CHECK(adjoint_generator(sys, one).is_zero());
}

TEST_CASE("divergence examples") {
  Polynomial b = var(1, 0) * var(1, 0);
  BExpr density(b, cst(1, 1), Rational(-1));  // x^-2
  SUBCASE("f = -x gives +x^-2") {
    auto div = divergence_condition({-var(1, 0)}, density);
    CHECK(div == BExpr(b, cst(1, 1), Rational(-1)));
  }
  SUBCASE("f = x gives -x^-2 (cleared coefficient -1)") {
    auto div = divergence_condition({var(1, 0)}, density);
    CHECK(div == BExpr(b, cst(1, -1), Rational(-1)));
    auto [p, shift] = div.clear_base();
    CHECK(p == cst(1, -1));
    CHECK(shift == Rational(-1));
  }
  SUBCASE("rotation field with D = 1 gives zero") {
    Polynomial b2 = var(2, 0) * var(2, 0) + var(2, 1) * var(2, 1);
    BExpr one(b2, cst(2, 1), Rational(0));
    auto div = divergence_condition({-var(2, 1), var(2, 0)}, one);
    CHECK(div.is_zero());
  }
}

TEST_CASE("noiseless consistency: divergence equals minus the adjoint image") {
  std::mt19937_64 rng(31);
  for (int iter = 0; iter < 20; ++iter) {
    std::size_t n = 1 + iter % 3;
    Polynomial b(n);
    for (std::size_t i = 0; i < n; ++i) b = b + var(n, i) * var(n, i);
    b = b + cst(n, 1);
    auto rnd_poly = [&](int deg) {
      Polynomial p(n);
      for (int t = 0; t < 4; ++t) {
        Monomial m(n);
        int d = static_cast<int>(rng() % (deg + 1));
        for (int k = 0; k < d; ++k) m[rng() % n] += 1;
        p.add_term(m, Rational(static_cast<std::int64_t>(rng() % 11) - 5, 1));
      }
      return p;
    };
    std::vector<Polynomial> field;
    std::vector<BExpr> drift;
    for (std::size_t i = 0; i < n; ++i) {
      field.push_back(rnd_poly(2));
      drift.push_back(BExpr::from_polynomial(b, field.back()));
    }
    SdeSystem sys(std::move(drift), {}, false);
    BExpr density(b, rnd_poly(2), Rational(-2));
    BExpr lhs = divergence_condition(field, density);
    BExpr rhs = adjoint_generator(sys, density);
    CHECK((lhs + rhs).is_zero());
  }
}

TEST_CASE("adjoint generator is linear in the density") {
  Example1 ex;
  std::mt19937_64 rng(77);
  for (int iter = 0; iter < 10; ++iter) {
    Rational alpha(static_cast<std::int64_t>(rng() % 13) - 6,
                   1 + static_cast<std::int64_t>(rng() % 4));
    Rational beta(static_cast<std::int64_t>(rng() % 13) - 6,
                  1 + static_cast<std::int64_t>(rng() % 4));
    BExpr d1(ex.b, var(2, 0) + cst(2, 1), Rational(-2));
    BExpr d2(ex.b, var(2, 1) * var(2, 1), Rational(-3));
    BExpr lhs =
        adjoint_generator(ex.sys, d1.scaled(alpha) + d2.scaled(beta));
    BExpr rhs = adjoint_generator(ex.sys, d1).scaled(alpha) +
                adjoint_generator(ex.sys, d2).scaled(beta);
    CHECK(lhs == rhs);
  }
}

TEST_CASE("time change: rate b^-2 scales drift by b^-2 and noise by b^-1") {
  Example1 ex;
  BExpr rate(ex.b, cst(2, 1), Rational(-2));
  TimeChange tc = time_change(ex.sys, rate);
  CHECK(tc.system.drift()[0] == ex.sys.drift()[0] * rate);
  CHECK(tc.system.noise()[0][0] ==
        ex.sys.noise()[0][0] * BExpr(ex.b, cst(2, 1), Rational(-1)));
  CHECK(tc.density_scale == BExpr(ex.b, cst(2, 1), Rational(2)));

  SUBCASE("identity rate is the identity transform") {
    BExpr one(ex.b, cst(2, 1), Rational(0));
    TimeChange id = time_change(ex.sys, one);
    CHECK(id.system.drift()[0] == ex.sys.drift()[0]);
    CHECK(id.system.noise()[0][1] == ex.sys.noise()[0][1]);
    CHECK(id.density_scale == one);
  }
  SUBCASE("non-square constant is rejected") {
    BExpr bad(ex.b, cst(2, 2), Rational(-2));
    CHECK_THROWS_AS(time_change(ex.sys, bad), NotExpressible);
  }
  SUBCASE("polynomial rate coefficient is rejected") {
    BExpr bad(ex.b, cst(2, 1) + var(2, 0), Rational(-2));
    CHECK_THROWS_AS(time_change(ex.sys, bad), NotExpressible);
  }
}

TEST_CASE("time-change identity: transformed adjoint of D/c equals original") {
  std::mt19937_64 rng(555);
  for (int iter = 0; iter < 10; ++iter) {
    std::size_t n = 1 + iter % 3;
    Polynomial b(n);
    for (std::size_t i = 0; i < n; ++i) b = b + var(n, i) * var(n, i);
    b = b + cst(n, 1);
    auto rnd_poly = [&](int deg) {
      Polynomial p(n);
      for (int t = 0; t < 3; ++t) {
        Monomial m(n);
        int d = static_cast<int>(rng() % (deg + 1));
        for (int k = 0; k < d; ++k) m[rng() % n] += 1;
        p.add_term(m, Rational(static_cast<std::int64_t>(rng() % 9) - 4, 1));
      }
      return p;
    };
    std::vector<BExpr> drift;
    std::vector<std::vector<BExpr>> noise(1);
    for (std::size_t i = 0; i < n; ++i) {
      drift.push_back(BExpr::from_polynomial(b, rnd_poly(3)));
      noise[0].push_back(BExpr::from_polynomial(b, rnd_poly(2)));
    }
    SdeSystem sys(std::move(drift), std::move(noise), false);
    BExpr density(b, rnd_poly(2), Rational(-2));
    BExpr rate(b, cst(n, 1), Rational(-2));
    TimeChange tc = time_change(sys, rate);
    BExpr transformed_density = density * tc.density_scale;
    CHECK(adjoint_generator(tc.system, transformed_density) ==
          adjoint_generator(sys, density));
  }
}

TEST_CASE("growth checks") {
  SUBCASE("planar quadratic system holds at p = 1") {
    Example1 ex;
    auto rep = check_growth(ex.sys, 1);
    CHECK(rep.verdict == Verdict::Holds);
  }
  SUBCASE("degree-5 drift fails at p = 1") {
    Polynomial b = var(1, 0) * var(1, 0) + cst(1, 1);
    auto x = var(1, 0);
    std::vector<BExpr> drift{BExpr::from_polynomial(b, x * x * x * x * x)};
    SdeSystem sys(std::move(drift), {}, false);
    auto rep = check_growth(sys, 1);
    CHECK(rep.verdict == Verdict::Fails);
  }
  SUBCASE("linear system holds at p = 1") {
    Polynomial b = var(1, 0) * var(1, 0) + cst(1, 1);
    std::vector<BExpr> drift{BExpr::from_polynomial(b, -var(1, 0))};
    std::vector<std::vector<BExpr>> noise{{BExpr::from_polynomial(b, var(1, 0))}};
    SdeSystem sys(std::move(drift), std::move(noise), false);
    CHECK(check_growth(sys, 1).verdict == Verdict::Holds);
    CHECK(check_lipschitz(sys).verdict == Verdict::Holds);
  }
  SUBCASE("rational entries raise NotPolynomial") {
    Example3 ex;  // drift has a b^-1 term
    CHECK_THROWS_AS(check_growth(ex.sys, 1), NotPolynomial);
  }
}

TEST_CASE("integrability checks") {
  auto x = var(2, 0), z = var(2, 1);
  Polynomial b = x * x + z * z;
  SUBCASE("quartic-decay density integrable in the plane") {
    DensityCandidate d{cst(2, 1), b, Rational(2)};
    auto rep = check_integrability(d, std::nullopt);
    CHECK(rep.verdict == Verdict::Holds);
  }
  SUBCASE("with p = 1 the combined test is exactly marginal") {
    DensityCandidate d{cst(2, 1), b, Rational(2)};
    auto rep = check_integrability(d, 1);
    CHECK(rep.verdict == Verdict::Marginal);
  }
  SUBCASE("constant density in 1-d fails") {
    Polynomial b1 = var(1, 0) * var(1, 0);
    DensityCandidate d{cst(1, 1), b1, Rational(0)};
    CHECK(check_integrability(d, std::nullopt).verdict == Verdict::Fails);
  }
  SUBCASE("sqrt(2+p^2) is non-integrable (escape-shape density)") {
    Polynomial b1 = var(1, 0) * var(1, 0) + cst(1, 2);
    DensityCandidate d{cst(1, 1), b1, Rational(-1, 2)};
    CHECK(check_integrability(d, std::nullopt).verdict == Verdict::Fails);
  }
  SUBCASE("base vanishing off the origin is an error") {
    DensityCandidate d{cst(2, 1), x * x - z * z, Rational(2)};
    CHECK_THROWS_AS(check_integrability(d, std::nullopt),
                    BaseVanishesOffOrigin);
  }
}

TEST_CASE("positivity on the sphere") {
  auto x = var(2, 0), y = var(2, 1);
  SUBCASE("x^2 + y^2 is certified positive") {
    auto r = positivity_on_sphere(x * x + y * y);
    CHECK(r.kind == SpherePositivity::Kind::Positive);
    CHECK(r.certified);
  }
  SUBCASE("x^2 - y^2 has a found zero near the diagonal") {
    auto r = positivity_on_sphere(x * x - y * y);
    REQUIRE(r.kind == SpherePositivity::Kind::FoundZero);
    REQUIRE(r.witness.size() == 2);
    CHECK(std::abs(std::abs(r.witness[0]) - std::abs(r.witness[1])) < 0.05);
  }
  SUBCASE("ellipsoid boundary polynomial is indefinite on the sphere") {
    auto r = positivity_on_sphere(Example2().invariant_set);
    CHECK(r.kind == SpherePositivity::Kind::FoundZero);
  }
}

TEST_CASE("equilibrium flag is enforced at construction") {
  Polynomial b = var(1, 0) * var(1, 0) + cst(1, 1);
  std::vector<BExpr> drift{BExpr::from_polynomial(b, var(1, 0) + cst(1, 1))};
  CHECK_THROWS_AS(SdeSystem(std::move(drift), {}, true), std::invalid_argument);
}
