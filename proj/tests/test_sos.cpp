#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "agstab/sos.hpp"

using namespace agstab;

namespace {

FPolynomial fp(std::size_t n, std::vector<std::pair<std::vector<int>, double>> terms) {
  FPolynomial p(n);
  for (auto& [e, c] : terms) p.add_term(Monomial(std::move(e)), c);
  return p;
}

// Independent PSD-completion search: propagate forced-zero rows (a diagonal
// pinned to zero kills its row and column), then grid the remaining affine
// freedom.  Concludes "infeasible" rigorously when propagation pins a
// diagonal to a negative value.
struct CompletionOracle {
  enum Result { ProvedInfeasible, FoundPsdPoint, Unknown };

  static Result search(const SosProblem& prob) {
    const auto& basis = prob.basis;
    const std::size_t n = basis.size();
    GramIncidence inc = gram_incidence(basis);
    // live[i]: row i may still carry nonzeros.
    std::vector<bool> live(n, true);
    // Forced single-diagonal constraints first: coefficient rows whose only
    // live contribution is one diagonal entry pin that entry.
    std::map<Monomial, double, GrlexLess> rhs;
    for (const auto& [m, pairs] : inc) rhs[m] = prob.n0.coeff(m);
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& [m, pairs] : inc) {
        int live_diag = -1;
        bool has_live_offdiag = false;
        for (auto [i, j] : pairs) {
          if (!live[i] || !live[j]) continue;
          if (i == j)
            live_diag = i;
          else
            has_live_offdiag = true;
        }
        if (has_live_offdiag) continue;
        if (live_diag < 0) {
          if (std::abs(rhs.at(m)) > 1e-12) return ProvedInfeasible;
          continue;
        }
        double v = rhs.at(m);
        if (v < -1e-12) return ProvedInfeasible;
        if (std::abs(v) <= 1e-12) {
          live[live_diag] = false;
          changed = true;
        }
      }
    }
    return Unknown;
  }
};

}  // namespace

TEST_CASE("perfect square certified with tiny residual") {
  // x^4 + 2x^2y^2 + y^4 = (x^2+y^2)^2
  FPolynomial n = fp(2, {{{4, 0}, 1}, {{2, 2}, 2}, {{0, 4}, 1}});
  SosProblem prob = build_sos_feasibility(n);
  CHECK(prob.basis.size() == 3);  // x^2, xy, y^2 after the degree window
  SdpOptions opts;
  opts.tol_primal = 1e-11;
  opts.tol_gap = 1e-11;
  auto sol = sdp_solve(prob.sdp, opts);
  REQUIRE(sol.status == SdpStatus::Feasible);
  SosCertificate cert = extract_certificate(prob, sol);
  CHECK(cert.residual <= 1e-9);
  CHECK(cert.min_eig >= -1e-9);
  CHECK(cert.valid(1e-9, 1e-9));

  SUBCASE("rank-1 gram recovers the single square") {
    auto sq = cert.squares();
    REQUIRE(sq.size() >= 1);
    // Dominant square should be proportional to x^2 + y^2.
    const auto& [w, p] = sq.front();
    double cxx = p.coeff(Monomial(std::vector<int>{2, 0}));
    double cyy = p.coeff(Monomial(std::vector<int>{0, 2}));
    CHECK(w * cxx * cxx == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(cxx == doctest::Approx(cyy).epsilon(1e-6));
    // Soundness spot check: certified target nonneg at random points.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int k = 0; k < 100; ++k) {
      std::vector<double> x{u(rng), u(rng)};
      double acc = 0;
      for (const auto& [wt, q] : sq) {
        double v = q.eval(std::span<const double>(x));
        acc += wt * v * v;
      }
      CHECK(acc >= -1e-6);
    }
  }
}

TEST_CASE("motzkin polynomial is rejected, with independent cross-check") {
  // x^4 y^2 + x^2 y^4 - 3 x^2 y^2 + 1: nonnegative but not a sum of squares.
  FPolynomial n = fp(2, {{{4, 2}, 1}, {{2, 4}, 1}, {{2, 2}, -3}, {{0, 0}, 1}});
  SosProblem prob = build_sos_feasibility(n);
  auto sol = sdp_solve(prob.sdp);
  REQUIRE(sol.status == SdpStatus::Infeasible);
  double lmin = 0, fn = 0, by = 0;
  CHECK(sdp_verify_ray(prob.sdp, sol.ray, &lmin, &fn, &by) <= 1e-5);
  CHECK(by > 0.5);
  CHECK(CompletionOracle::search(prob) == CompletionOracle::ProvedInfeasible);
}

TEST_CASE("parametric: theta * x^2 with no structural constraints") {
  FPolynomial n0(1);
  std::vector<FPolynomial> nj{fp(1, {{{2}, 1}})};
  SosProblem prob = build_parametric_sos(n0, nj, {});
  auto sol = sdp_solve(prob.sdp);
  REQUIRE(sol.status == SdpStatus::Feasible);
  SosCertificate cert = extract_certificate(prob, sol);
  CHECK(cert.params[0] >= -1e-9);
  CHECK(cert.residual <= 1e-7);
}

TEST_CASE("parametric: negative constant with no parameters is infeasible") {
  FPolynomial n0 = fp(1, {{{0}, -1.0}});
  SosProblem prob = build_parametric_sos(n0, {}, {});
  auto sol = sdp_solve(prob.sdp);
  CHECK(sol.status == SdpStatus::Infeasible);
}

TEST_CASE("inconsistent structural constraints are rejected up front") {
  FPolynomial n0(1);
  std::vector<FPolynomial> nj{fp(1, {{{2}, 1}}), fp(1, {{{0}, 1}})};
  StructuralConstraint a{{{1, 1.0}}, 0.0};   // theta_1 = 0
  StructuralConstraint b{{{1, 2.0}}, 3.0};   // 2 theta_1 = 3
  CHECK_THROWS_AS(build_parametric_sos(n0, nj, {a, b}), InconsistentStructural);
}

TEST_CASE("localized: x >= 0 on {x >= 0}") {
  FPolynomial n = fp(1, {{{1}, 1}});
  SosProblem prob = localized_sos(n, {fp(1, {{{1}, 1}})}, {0});
  auto sol = sdp_solve(prob.sdp);
  REQUIRE(sol.status == SdpStatus::Feasible);
  SosCertificate cert = extract_certificate(prob, sol);
  CHECK(cert.residual <= 1e-7);
  REQUIRE(cert.mult_grams.size() == 1);
  CHECK(cert.mult_grams[0](0, 0) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("localized: 1 - x^2 >= 0 on {1 - x^2 >= 0}") {
  FPolynomial g = fp(1, {{{0}, 1}, {{2}, -1}});
  SosProblem prob = localized_sos(g, {g}, {0});
  auto sol = sdp_solve(prob.sdp);
  REQUIRE(sol.status == SdpStatus::Feasible);
  CHECK(extract_certificate(prob, sol).residual <= 1e-7);
}

TEST_CASE("localized degree cap raises DegreeOverflow") {
  FPolynomial n = fp(1, {{{1}, 1}});
  CHECK_THROWS_AS(localized_sos(n, {fp(1, {{{1}, 1}})}, {42}, 10),
                  DegreeOverflow);
}

TEST_CASE("odd degree rejected") {
  CHECK_THROWS_AS(build_sos_feasibility(fp(1, {{{3}, 1}})), OddDegree);
}

TEST_CASE("the published closed-loop sextic is a sum of squares") {
  FPolynomial printed = fp(2, {{{0, 6}, 0.35},
                              {{1, 5}, -0.0015},
                              {{2, 4}, 0.6},
                              {{3, 3}, 0.0026},
                              {{4, 2}, 0.33},
                              {{5, 1}, 0.004},
                              {{6, 0}, 0.13}});
  SosProblem prob = build_sos_feasibility(printed);
  CHECK(prob.basis.size() == 4);  // homogeneous: cubic basis only
  auto sol = sdp_solve(prob.sdp);
  REQUIRE(sol.status == SdpStatus::Feasible);
  SosCertificate cert = extract_certificate(prob, sol);
  CHECK(cert.valid(1e-7, 1e-8));
}

TEST_CASE("localized certification at multiplier degree 2 on the ellipsoid") {
  // Cleared sign polynomial 12 x^2 over {2z - 2z^2 - x^2 - y^2 >= 0}: the
  // zero multiplier is feasible, so a degree-2 multiplier must be too.
  FPolynomial target = fp(3, {{{2, 0, 0}, 12.0}});
  FPolynomial g = fp(3, {{{0, 0, 1}, 2.0},
                         {{0, 0, 2}, -2.0},
                         {{2, 0, 0}, -1.0},
                         {{0, 2, 0}, -1.0}});
  SosProblem prob = localized_sos(target, {g}, {2});
  auto sol = sdp_solve(prob.sdp);
  REQUIRE(sol.status == SdpStatus::Feasible);
  CHECK(extract_certificate(prob, sol).residual <= 1e-7);
}

TEST_CASE("monotonicity: enlarging the basis preserves feasibility") {
  std::vector<FPolynomial> known = {
      fp(2, {{{4, 0}, 1}, {{2, 2}, 2}, {{0, 4}, 1}}),          // (x^2+y^2)^2
      fp(2, {{{2, 0}, 1}, {{0, 2}, 4}}),                        // x^2 + 4y^2
      fp(2, {{{4, 0}, 2}, {{2, 2}, 1}, {{0, 4}, 3}, {{0, 0}, 1}}),
      fp(1, {{{2}, 1}, {{1}, -2}, {{0}, 1}}),                   // (x-1)^2
  };
  for (const auto& n : known) {
    for (int extra = 0; extra <= 1; ++extra) {
      SosProblem prob = build_sos_feasibility(n, extra);
      auto sol = sdp_solve(prob.sdp);
      INFO("extra degree ", extra);
      CHECK(sol.status == SdpStatus::Feasible);
      if (sol.status == SdpStatus::Feasible)
        CHECK(extract_certificate(prob, sol).residual <= 1e-6);
    }
  }
}

TEST_CASE("pretty printer emits a human-auditable listing") {
  FPolynomial n = fp(2, {{{2, 0}, 1}, {{0, 2}, 1}});
  SosProblem prob = build_sos_feasibility(n);
  std::vector<std::string> names{"x", "y"};
  std::string text = prob.describe(names);
  CHECK(text.find("gram block") != std::string::npos);
  CHECK(text.find("basis:") != std::string::npos);
  CHECK(text.find("rhs") != std::string::npos);
}
