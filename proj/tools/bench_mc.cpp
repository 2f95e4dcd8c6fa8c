// Benchmark: parallel trajectory kernel against the serial reference on the
// planar quadratic system, verifying that both produce identical reports.

#include <chrono>
#include <cstdio>
#include <iostream>

#include "agstab/mc.hpp"

using namespace agstab;

namespace {

SdeSystem planar_system() {
  auto x = Polynomial::variable(2, 0);
  auto z = Polynomial::variable(2, 1);
  Polynomial b = x * x + z * z;
  std::vector<BExpr> drift{
      BExpr::from_polynomial(b, x * x - x.scaled(Rational(2)) - z * z),
      BExpr::from_polynomial(b, (z * x - z).scaled(Rational(2)))};
  std::vector<std::vector<BExpr>> noise{
      {BExpr::from_polynomial(b, x), BExpr::from_polynomial(b, z)}};
  return SdeSystem(std::move(drift), std::move(noise), true);
}

bool reports_equal(const SimReport& a, const SimReport& b) {
  if (a.converged != b.converged || a.escaped != b.escaped ||
      a.undecided != b.undecided)
    return false;
  for (std::size_t i = 0; i < a.per_path.size(); ++i) {
    if (a.per_path[i].outcome != b.per_path[i].outcome) return false;
    if (a.per_path[i].exit_time != b.per_path[i].exit_time) return false;
    if (a.per_path[i].final_radius != b.per_path[i].final_radius) return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  int paths = argc > 1 ? std::atoi(argv[1]) : 512;
  SdeSystem sys = planar_system();
  SimConfig cfg;
  cfg.paths = paths;
  cfg.step = 1e-3;
  cfg.horizon = 10.0;
  cfg.seed = 42;
  cfg.box_lo = -3;
  cfg.box_hi = 3;
  cfg.exclude_radius = 0.1;
  cfg.eps_conv = 1e-2;
  cfg.r_escape = 1e6;

  using clock = std::chrono::steady_clock;
  auto t0 = clock::now();
  SimReport serial = run_mc_serial(sys, cfg);
  auto t1 = clock::now();
  SimReport parallel = run_mc(sys, cfg, true);
  auto t2 = clock::now();

  double ts = std::chrono::duration<double>(t1 - t0).count();
  double tp = std::chrono::duration<double>(t2 - t1).count();
  std::printf("paths            %d\n", paths);
  std::printf("serial           %.3f s\n", ts);
  std::printf("parallel         %.3f s\n", tp);
  std::printf("speedup          %.2fx\n", ts / tp);
  std::printf("identical        %s\n", reports_equal(serial, parallel) ? "yes" : "NO");
  std::printf("converged        %d / %d\n", serial.converged, serial.paths);
  return reports_equal(serial, parallel) ? 0 : 1;
}
