#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "agstab/synth.hpp"

namespace agstab {

/// Philox4x32-10 counter-based generator.  Streams are keyed per path, so
/// draws are independent of scheduling and the same (seed, path) pair always
/// yields the same sequence.
class PhiloxStream {
 public:
  explicit PhiloxStream(std::uint64_t key) : k0_(static_cast<std::uint32_t>(key)),
                                             k1_(static_cast<std::uint32_t>(key >> 32)) {}
  std::uint64_t next_u64();
  /// Uniform in [0, 1): top 53 bits of the counter output.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint32_t k0_, k1_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 2;  // two u64 per block

  std::array<std::uint32_t, 4> block(std::uint64_t ctr) const;
};

/// Standard normals via Box-Muller on consecutive Philox outputs:
/// u1 in (0,1], u2 in [0,1); z0 = sqrt(-2 ln u1) cos(2 pi u2), z1 = sin twin.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t key) : u_(key) {}
  double next();
  double next_uniform() { return u_.next_uniform(); }

 private:
  PhiloxStream u_;
  double spare_ = 0;
  bool has_spare_ = false;
};

struct SimConfig {
  double step = 1e-3;     // h
  double horizon = 30.0;  // T
  int paths = 1000;
  std::uint64_t seed = 0;

  enum class Init { Box, Sphere, Fixed } init = Init::Box;
  double box_lo = -1.0, box_hi = 1.0;
  double sphere_radius = 1.0;
  std::vector<std::vector<double>> fixed_points;
  double exclude_radius = 0.0;  // resample while |x0| < this (and |x0| == 0)

  double eps_conv = 1e-2;
  double dwell_fraction = 0.2;  // phi: tail share of the horizon
  double r_escape = 1e6;
  bool track_jacobian = false;

  void validate(std::size_t dim) const;
};

enum class Outcome { Converged, Escaped, Undecided };
std::string to_string(Outcome o);

struct PathResult {
  Outcome outcome = Outcome::Undecided;
  double exit_time = -1.0;    // set for Escaped
  double final_radius = 0.0;  // set otherwise
  bool overflow = false;      // non-finite state forced the Escaped class
  // Jacobian extras (track_jacobian only).
  double min_logdet = 0.0;
  int det_nonpositive_steps = 0;
};

struct SimReport {
  int paths = 0;
  int converged = 0, escaped = 0, undecided = 0;
  double frac_converged = 0, frac_escaped = 0, frac_undecided = 0;
  double ci_converged[2] = {0, 0};  // binomial 95% normal interval
  double ci_escaped[2] = {0, 0};
  double mean_escape_time = 0, min_escape_time = 0, max_escape_time = 0;
  double mean_final_radius = 0;  // over non-escaped paths
  int overflow_count = 0;
  int det_nonpositive_total = 0;
  std::uint64_t seed = 0;
  SimConfig config;
  std::vector<PathResult> per_path;
};

/// Pre-lowered floating evaluators for one system (built once per run).
class CompiledSystem {
 public:
  explicit CompiledSystem(const SdeSystem& sys);

  std::size_t dim() const { return dim_; }
  std::size_t num_noise() const { return noise_.size(); }
  void drift(std::span<const double> x, std::span<double> out) const;
  void noise(std::size_t k, std::span<const double> x,
             std::span<double> out) const;

 private:
  std::size_t dim_;
  std::vector<CompiledBExpr> drift_;
  std::vector<std::vector<CompiledBExpr>> noise_;
};

/// One explicit Euler-Maruyama step:
/// x <- x + X0(x) h + sum_k Xk(x) sqrt(h) xi_k.
/// Returns false when the updated state is non-finite.
bool step_em(const CompiledSystem& sys, std::span<double> state, double h,
             std::span<const double> gaussians, std::span<double> scratch);

/// Runs cfg.paths independent trajectories and classifies each one.
/// Path i draws from the Philox stream keyed with seed xor i, so the report
/// is a pure function of (system, config) regardless of scheduling.
SimReport run_mc(const SdeSystem& sys, const SimConfig& cfg,
                 bool parallel = true);
/// Plain serial loop kept as the reference implementation for testing and
/// benchmarking against the parallel kernel.
SimReport run_mc_serial(const SdeSystem& sys, const SimConfig& cfg);

/// Scalar state feedback u = c/a applied through the control channel.
struct ControlLaw {
  CompiledPoly numerator;
  CompiledPoly denominator;  // evaluates to a(x); must stay positive
  double eval(std::span<const double> x) const {
    return numerator.eval(x) / denominator.eval(x);
  }
};

SimReport simulate_controlled(const ControlledSdeSystem& sys,
                              const ControlLaw& u, const SimConfig& cfg,
                              bool parallel = true);

/// Per-path log-determinant series of the Euler variational equation
/// J <- J + DX0(x) J h + sum_k DXk(x) J sqrt(h) xi_k, J(0) = I, driven by
/// the same gaussians as the state.
struct JacobianPath {
  std::vector<double> logdet;  // one entry per step with det > 0
  double min_logdet = 0.0;
  int det_nonpositive_steps = 0;
  Outcome outcome = Outcome::Undecided;
};
std::vector<JacobianPath> run_jacobian(const SdeSystem& sys,
                                       const SimConfig& cfg);

}  // namespace agstab
