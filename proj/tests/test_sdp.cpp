#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "agstab/sdp.hpp"

using namespace agstab;

namespace {

Mat random_sym(std::mt19937_64& rng, std::size_t n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double v = u(rng);
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

void add_sym(SdpProblem& p, int constraint, const Mat& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i; j < a.size(); ++j)
      if (a(i, j) != 0.0)
        p.add_entry(constraint, 0, static_cast<int>(i), static_cast<int>(j),
                    a(i, j));
}

}  // namespace

TEST_CASE("1x1 block: x >= 0 with x = 2") {
  SdpProblem p;
  p.block_sizes = {1};
  p.constraints.resize(1);
  p.add_entry(0, 0, 0, 0, 1.0);
  p.constraints[0].rhs = 2.0;
  p.obj_mat.push_back({0, 0, 0, 1.0});  // minimize trace
  auto s = sdp_solve(p);
  REQUIRE(s.status == SdpStatus::Feasible);
  CHECK(s.blocks[0](0, 0) == doctest::Approx(2.0).epsilon(1e-7));
  auto check = sdp_verify(p, s);
  CHECK(check.feasible(1e-6, 1e-8));
}

TEST_CASE("2x2 block with free variable: minimize t s.t. [[1,t],[t,1]] psd") {
  SdpProblem p;
  p.block_sizes = {2};
  p.num_free = 1;
  p.constraints.resize(3);
  p.add_entry(0, 0, 0, 0, 1.0);
  p.constraints[0].rhs = 1.0;
  p.add_entry(1, 0, 1, 1, 1.0);
  p.constraints[1].rhs = 1.0;
  p.add_entry(2, 0, 0, 1, 0.5);  // <A,X> = X12
  p.constraints[2].free_coeffs.emplace_back(0, -1.0);
  p.constraints[2].rhs = 0.0;
  p.obj_free.emplace_back(0, 1.0);  // minimize t
  auto s = sdp_solve(p);
  REQUIRE(s.status == SdpStatus::Feasible);
  CHECK(s.free_values[0] == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(sdp_verify(p, s).feasible(1e-6, 1e-7));

  SUBCASE("objective decreases monotonically once near-feasible") {
    REQUIRE(s.objective_log.size() >= 4);
    std::size_t half = s.objective_log.size() / 2;
    for (std::size_t i = half; i + 1 < s.objective_log.size(); ++i)
      CHECK(s.objective_log[i + 1] <=
            s.objective_log[i] + 1e-7 * (1 + std::abs(s.objective_log[i])));
  }
  SUBCASE("deterministic: same problem, same result") {
    auto s2 = sdp_solve(p);
    CHECK(s2.free_values[0] == s.free_values[0]);
    CHECK(s2.iterations == s.iterations);
  }
}

TEST_CASE("infeasible 1x1: x >= 0 with x = -1 yields a verified ray") {
  SdpProblem p;
  p.block_sizes = {1};
  p.constraints.resize(1);
  p.add_entry(0, 0, 0, 0, 1.0);
  p.constraints[0].rhs = -1.0;
  auto s = sdp_solve(p);
  REQUIRE(s.status == SdpStatus::Infeasible);
  REQUIRE(s.ray.size() == 1);
  double lmin = 0, fn = 0, by = 0;
  double viol = sdp_verify_ray(p, s.ray, &lmin, &fn, &by);
  CHECK(viol <= 1e-6);
  CHECK(by > 0.5);
}

TEST_CASE("random 3x3 problems: constructed status, brute-force lattice agreement") {
  std::mt19937_64 rng(424242);

  auto run_case = [&](bool feasible, bool with_lattice) {
    SdpProblem p;
    p.block_sizes = {3};
    p.constraints.resize(3);
    std::vector<Mat> A(3);
    std::vector<double> b(3);
    if (feasible) {
      Mat r = random_sym(rng, 3, 1.0);
      Mat x0 = r * r.transpose() + Mat::identity(3, 1.0);
      for (int i = 0; i < 3; ++i) {
        A[i] = random_sym(rng, 3, 1.0);
        b[i] = dot(A[i], x0);
      }
    } else {
      // Farkas construction: A*(y0) = -I with b.y0 = 1.
      std::vector<double> y0{0.7, -0.4, 1.3};
      A[0] = random_sym(rng, 3, 1.0);
      A[1] = random_sym(rng, 3, 1.0);
      Mat acc = Mat::identity(3, 1.0);
      acc.axpy(y0[0], A[0]);
      acc.axpy(y0[1], A[1]);
      A[2] = acc.scaled(-1.0 / y0[2]);
      double n2 = y0[0] * y0[0] + y0[1] * y0[1] + y0[2] * y0[2];
      for (int i = 0; i < 3; ++i) b[i] = y0[i] / n2;
    }
    for (int i = 0; i < 3; ++i) {
      add_sym(p, i, A[i]);
      p.constraints[i].rhs = b[i];
    }
    p.obj_mat.push_back({0, 0, 0, 1.0});
    p.obj_mat.push_back({0, 1, 1, 1.0});
    p.obj_mat.push_back({0, 2, 2, 1.0});

    auto s = sdp_solve(p);
    if (feasible) {
      REQUIRE(s.status == SdpStatus::Feasible);
      CHECK(sdp_verify(p, s).feasible(1e-6, 1e-7));
    } else {
      REQUIRE(s.status == SdpStatus::Infeasible);
      CHECK(sdp_verify_ray(p, s.ray) <= 1e-5);
    }

    if (!with_lattice) return;
    // Brute force: parametrize {X : <A_i,X> = b_i} in the 6-dim coordinate
    // space and scan a 100^3 lattice of the 3-dim solution manifold.
    auto to_row = [](const Mat& a) {
      return std::vector<double>{a(0, 0), a(1, 1), a(2, 2),
                                 2 * a(0, 1), 2 * a(0, 2), 2 * a(1, 2)};
    };
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 3; ++i) rows.push_back(to_row(A[i]));
    // Particular solution: x = R^T (R R^T)^-1 b.
    Mat gram(3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s2 = 0;
        for (int t = 0; t < 6; ++t) s2 += rows[i][t] * rows[j][t];
        gram(i, j) = s2;
      }
    std::vector<double> lam;
    REQUIRE(lu_solve(gram, b, lam));
    std::vector<double> xp(6, 0.0);
    for (int i = 0; i < 3; ++i)
      for (int t = 0; t < 6; ++t) xp[t] += lam[i] * rows[i][t];
    // Orthonormal nullspace basis by Gram-Schmidt against the rows.
    std::vector<std::vector<double>> basis = rows;
    for (auto& v : basis) {
      double n = 0;
      for (double x : v) n += x * x;
      for (double& x : v) x /= std::sqrt(n);
    }
    // re-orthonormalize rows themselves first
    std::vector<std::vector<double>> ortho;
    for (auto v : rows) {
      for (const auto& q : ortho) {
        double c = 0;
        for (int t = 0; t < 6; ++t) c += v[t] * q[t];
        for (int t = 0; t < 6; ++t) v[t] -= c * q[t];
      }
      double n = 0;
      for (double x : v) n += x * x;
      REQUIRE(n > 1e-12);
      for (double& x : v) x /= std::sqrt(n);
      ortho.push_back(v);
    }
    std::vector<std::vector<double>> null_basis;
    for (int e = 0; e < 6 && null_basis.size() < 3; ++e) {
      std::vector<double> v(6, 0.0);
      v[e] = 1.0;
      for (const auto& q : ortho) {
        double c = 0;
        for (int t = 0; t < 6; ++t) c += v[t] * q[t];
        for (int t = 0; t < 6; ++t) v[t] -= c * q[t];
      }
      for (const auto& q : null_basis) {
        double c = 0;
        for (int t = 0; t < 6; ++t) c += v[t] * q[t];
        for (int t = 0; t < 6; ++t) v[t] -= c * q[t];
      }
      double n = 0;
      for (double x : v) n += x * x;
      if (n < 1e-8) continue;
      for (double& x : v) x /= std::sqrt(n);
      null_basis.push_back(v);
    }
    REQUIRE(null_basis.size() == 3);

    auto psd_at = [&](double t0, double t1, double t2) {
      std::vector<double> x = xp;
      for (int t = 0; t < 6; ++t)
        x[t] += t0 * null_basis[0][t] + t1 * null_basis[1][t] +
                t2 * null_basis[2][t];
      Mat X(3);
      X(0, 0) = x[0];
      X(1, 1) = x[1];
      X(2, 2) = x[2];
      X(0, 1) = X(1, 0) = x[3] / 2;
      X(0, 2) = X(2, 0) = x[4] / 2;
      X(1, 2) = X(2, 1) = x[5] / 2;
      Mat lower;
      return cholesky(X, lower);
    };
    bool lattice_found = false;
    const int kGrid = 100;  // 10^6 lattice points
    const double kRange = 12.0;
    for (int i0 = 0; i0 < kGrid && !lattice_found; ++i0)
      for (int i1 = 0; i1 < kGrid && !lattice_found; ++i1)
        for (int i2 = 0; i2 < kGrid && !lattice_found; ++i2) {
          double t0 = -kRange + 2 * kRange * i0 / (kGrid - 1);
          double t1 = -kRange + 2 * kRange * i1 / (kGrid - 1);
          double t2 = -kRange + 2 * kRange * i2 / (kGrid - 1);
          if (psd_at(t0, t1, t2)) lattice_found = true;
        }
    CHECK(lattice_found == feasible);
  };

  run_case(true, true);
  run_case(false, true);
  for (int rep = 0; rep < 10; ++rep) run_case(true, false);
  for (int rep = 0; rep < 10; ++rep) run_case(false, false);
}

TEST_CASE("dependent rows: consistent dropped, inconsistent infeasible") {
  SdpProblem p;
  p.block_sizes = {2};
  p.constraints.resize(3);
  p.add_entry(0, 0, 0, 0, 1.0);
  p.constraints[0].rhs = 1.0;
  p.add_entry(1, 0, 0, 0, 2.0);  // duplicate of row 0, scaled
  p.constraints[1].rhs = 2.0;
  p.add_entry(2, 0, 1, 1, 1.0);
  p.constraints[2].rhs = 3.0;
  p.obj_mat.push_back({0, 0, 0, 1.0});
  p.obj_mat.push_back({0, 1, 1, 1.0});
  auto s = sdp_solve(p);
  REQUIRE(s.status == SdpStatus::Feasible);
  REQUIRE(s.warnings.size() == 1);
  CHECK(s.warnings[0].find("dropped dependent") != std::string::npos);

  p.constraints[1].rhs = 2.5;  // now inconsistent
  auto s2 = sdp_solve(p);
  REQUIRE(s2.status == SdpStatus::Infeasible);
  CHECK(sdp_verify_ray(p, s2.ray) <= 1e-6);
}

TEST_CASE("sdpa writer golden output for the 1-block toy problem") {
  SdpProblem p;
  p.block_sizes = {2};
  p.constraints.resize(2);
  p.add_entry(0, 0, 0, 0, 1.0);
  p.add_entry(0, 0, 0, 1, 0.5);
  p.constraints[0].rhs = 1.0;
  p.add_entry(1, 0, 1, 1, 1.0);
  p.constraints[1].rhs = 2.0;
  p.obj_mat.push_back({0, 0, 0, 1.0});
  p.obj_mat.push_back({0, 1, 1, 1.0});

  std::string text = write_sdpa(p);
  std::ifstream golden(std::string(AGSTAB_GOLDEN_DIR) + "/toy.dat-s");
  REQUIRE(golden.good());
  std::string expected((std::istreambuf_iterator<char>(golden)),
                       std::istreambuf_iterator<char>());
  CHECK(text == expected);
}

TEST_CASE("sdpa round trip is structurally exact") {
  std::mt19937_64 rng(7);
  SdpProblem p;
  p.block_sizes = {3, 2};
  p.num_free = 2;
  p.constraints.resize(4);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 4; ++i) {
    for (int t = 0; t < 3; ++t) {
      int blk = static_cast<int>(rng() % 2);
      int n = p.block_sizes[blk];
      int r = static_cast<int>(rng() % n), c = static_cast<int>(rng() % n);
      p.add_entry(i, blk, r, c, u(rng));
    }
    p.constraints[i].free_coeffs.emplace_back(static_cast<int>(rng() % 2), u(rng));
    p.constraints[i].rhs = u(rng) / 3.0;  // not exactly representable decimals
  }
  p.obj_mat.push_back({1, 0, 1, u(rng)});
  p.obj_free.emplace_back(1, u(rng));
  p.comments.push_back("fixture problem");

  SdpProblem back = read_sdpa(write_sdpa(p));
  CHECK(sdp_structurally_equal(p, back));
  CHECK(back.comments == p.comments);
  // And a second trip is byte-identical.
  CHECK(write_sdpa(back) == write_sdpa(p));
}

TEST_CASE("sdpa malformed header raises ParseError at line 1") {
  try {
    read_sdpa("garbage here\n");
    FAIL("expected parse error");
  } catch (const SdpaParseError& e) {
    CHECK(e.line == 1);
  }
}
