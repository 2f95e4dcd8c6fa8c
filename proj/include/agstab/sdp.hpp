#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agstab/linalg.hpp"

namespace agstab {

/// Standard-form semidefinite program:
///   find PSD blocks X_k and free scalars theta
///   s.t. sum_k <A_i^k, X_k> + B_i . theta = b_i          (i = 1..m)
///   minimizing sum_k <C^k, X_k> + d . theta.
/// Symmetric matrix data is stored as upper-triangle entries; an entry at
/// (r, c) with r < c denotes the value at both (r, c) and (c, r), so
/// <A, X> counts off-diagonal positions twice.
struct SdpProblem {
  struct MatEntry {
    int block = 0;
    int row = 0;  // row <= col
    int col = 0;
    double value = 0;
  };
  struct Constraint {
    std::vector<MatEntry> mat;
    std::vector<std::pair<int, double>> free_coeffs;  // (theta index, coeff)
    double rhs = 0;
  };

  std::vector<int> block_sizes;
  int num_free = 0;
  std::vector<Constraint> constraints;
  std::vector<MatEntry> obj_mat;
  std::vector<std::pair<int, double>> obj_free;
  std::vector<std::string> comments;  // carried through SDPA read/write

  void validate() const;
  /// Adds `value` at symmetric position (r, c) of constraint i.
  void add_entry(int i, int block, int r, int c, double value);
};

enum class SdpStatus { Feasible, Infeasible, MaxIter, NumericalFailure };

std::string to_string(SdpStatus s);

struct SdpOptions {
  double tol_primal = 1e-8;
  double tol_dual = 1e-8;
  double tol_gap = 1e-8;
  double tol_eig = 1e-8;
  double tol_ray = 1e-8;
  double pivot_tol = 1e-10;  // rank-revealing row preprocessing
  int max_iter = 200;
  double init_radius = 10.0;
  double step_fraction = 0.98;  // fraction-to-the-boundary
  bool trace = false;           // per-iteration diagnostics on stderr
};

struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  std::vector<Mat> blocks;           // X
  std::vector<double> free_values;   // theta
  std::vector<double> dual;          // y, original constraint indexing
  double objective = 0;
  double primal_residual = 0;  // infinity norm of A(X) + B theta - b
  double dual_residual = 0;
  double rel_gap = 0;
  int iterations = 0;
  std::vector<double> objective_log;  // one entry per iteration
  std::vector<std::string> warnings;
  std::string failure;

  // Populated when status == Infeasible: improving ray y with
  // -A*(y) PSD (up to tol), B^T y = 0 (up to tol), b^T y = 1.
  std::vector<double> ray;
  double ray_min_eig = 0;
  double ray_free_norm = 0;
};

SdpSolution sdp_solve(const SdpProblem& p, const SdpOptions& opts = {});

/// Re-verification that never looks at solver state.
struct SdpCheck {
  double constraint_residual = 0;  // infinity norm
  double min_block_eig = 0;
  bool feasible(double tol_p, double tol_e) const {
    return constraint_residual <= tol_p && min_block_eig >= -tol_e;
  }
};
SdpCheck sdp_verify(const SdpProblem& p, const SdpSolution& s);

/// Checks a claimed improving ray; returns max violation of the certificate
/// inequalities (0 = perfect certificate).
double sdp_verify_ray(const SdpProblem& p, std::span<const double> ray,
                      double* min_eig = nullptr, double* free_norm = nullptr,
                      double* b_dot_y = nullptr);

struct SdpaParseError : std::runtime_error {
  int line;
  int column;
  SdpaParseError(int ln, int col, const std::string& msg);
};

/// Sparse SDPA (".dat-s") interchange.  Doubles are printed with 17
/// significant digits, so read(write(p)) is structurally equal to p,
/// bit-exact in every value.  Free variables are carried as a trailing
/// split diagonal block tagged in a comment so the reader can fold them
/// back; external solvers just see the equivalent split form.
std::string write_sdpa(const SdpProblem& p);
SdpProblem read_sdpa(const std::string& text);

bool sdp_structurally_equal(const SdpProblem& a, const SdpProblem& b);

}  // namespace agstab
