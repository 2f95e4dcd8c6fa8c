#include "agstab/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace agstab {

std::string to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Feasible: return "feasible";
    case SdpStatus::Infeasible: return "infeasible";
    case SdpStatus::MaxIter: return "max_iterations";
    case SdpStatus::NumericalFailure: return "numerical_failure";
  }
  return "?";
}

void SdpProblem::validate() const {
  for (int s : block_sizes)
    if (s < 1) throw std::invalid_argument("sdp: block size must be >= 1");
  if (num_free < 0) throw std::invalid_argument("sdp: negative free count");
  auto check_entry = [&](const MatEntry& e) {
    if (e.block < 0 || e.block >= static_cast<int>(block_sizes.size()))
      throw std::invalid_argument("sdp: entry block out of range");
    if (e.row < 0 || e.col < e.row || e.col >= block_sizes[e.block])
      throw std::invalid_argument("sdp: entry index out of range");
    if (!std::isfinite(e.value))
      throw std::invalid_argument("sdp: non-finite entry");
  };
  for (const auto& e : obj_mat) check_entry(e);
  for (const auto& [j, v] : obj_free) {
    if (j < 0 || j >= num_free)
      throw std::invalid_argument("sdp: objective free index");
    if (!std::isfinite(v)) throw std::invalid_argument("sdp: non-finite entry");
  }
  for (const auto& c : constraints) {
    for (const auto& e : c.mat) check_entry(e);
    for (const auto& [j, v] : c.free_coeffs) {
      if (j < 0 || j >= num_free)
        throw std::invalid_argument("sdp: constraint free index");
      if (!std::isfinite(v))
        throw std::invalid_argument("sdp: non-finite entry");
    }
    if (!std::isfinite(c.rhs)) throw std::invalid_argument("sdp: bad rhs");
  }
}

void SdpProblem::add_entry(int i, int block, int r, int c, double value) {
  if (i >= static_cast<int>(constraints.size())) constraints.resize(i + 1);
  if (r > c) std::swap(r, c);
  constraints[i].mat.push_back({block, r, c, value});
}

namespace {

// Dense symmetric matrix assembled from sparse entries.
Mat assemble(const std::vector<SdpProblem::MatEntry>& entries, int block,
             int size) {
  Mat m(size);
  for (const auto& e : entries) {
    if (e.block != block) continue;
    m(e.row, e.col) += e.value;
    if (e.row != e.col) m(e.col, e.row) += e.value;
  }
  return m;
}

// <A, X> for sparse symmetric A against a dense, possibly non-symmetric X
// (the Newton machinery feeds products like X A Sinv here).
double sparse_dot(const std::vector<SdpProblem::MatEntry>& entries, int block,
                  const Mat& x) {
  double s = 0;
  for (const auto& e : entries) {
    if (e.block != block) continue;
    s += e.value * (e.row == e.col ? x(e.row, e.col)
                                   : x(e.row, e.col) + x(e.col, e.row));
  }
  return s;
}

struct Work {
  const SdpProblem& p;
  std::vector<int> rows;  // surviving constraint indices
  std::size_t nb;
  int f;

  explicit Work(const SdpProblem& prob) : p(prob) {
    nb = p.block_sizes.size();
    f = p.num_free;
  }

  double a_dot(int i, const std::vector<Mat>& x) const {
    double s = 0;
    for (std::size_t k = 0; k < nb; ++k)
      s += sparse_dot(p.constraints[rows[i]].mat, static_cast<int>(k), x[k]);
    return s;
  }
  double b_theta(int i, const std::vector<double>& theta) const {
    double s = 0;
    for (const auto& [j, v] : p.constraints[rows[i]].free_coeffs)
      s += v * theta[j];
    return s;
  }
  void accumulate_dual(const std::vector<double>& y, std::vector<Mat>& out) const {
    for (std::size_t k = 0; k < nb; ++k) out[k] = Mat(p.block_sizes[k]);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (y[i] == 0.0) continue;
      for (const auto& e : p.constraints[rows[i]].mat) {
        out[e.block](e.row, e.col) += y[i] * e.value;
        if (e.row != e.col) out[e.block](e.col, e.row) += y[i] * e.value;
      }
    }
  }
};

double inf_norm(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

}  // namespace

SdpCheck sdp_verify(const SdpProblem& p, const SdpSolution& s) {
  SdpCheck out;
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    double lhs = 0;
    for (std::size_t k = 0; k < p.block_sizes.size(); ++k)
      lhs += sparse_dot(p.constraints[i].mat, static_cast<int>(k), s.blocks[k]);
    for (const auto& [j, v] : p.constraints[i].free_coeffs)
      lhs += v * s.free_values[j];
    out.constraint_residual =
        std::max(out.constraint_residual, std::abs(lhs - p.constraints[i].rhs));
  }
  out.min_block_eig = s.blocks.empty() ? 0.0 : 1e300;
  for (const auto& x : s.blocks)
    out.min_block_eig = std::min(out.min_block_eig, sym_min_eigenvalue(x));
  return out;
}

double sdp_verify_ray(const SdpProblem& p, std::span<const double> ray,
                      double* min_eig, double* free_norm, double* b_dot_y) {
  std::vector<Mat> z(p.block_sizes.size());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = Mat(p.block_sizes[k]);
  std::vector<double> bty(p.num_free, 0.0);
  double by = 0;
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    double yi = ray[i];
    by += yi * p.constraints[i].rhs;
    if (yi == 0.0) continue;
    for (const auto& e : p.constraints[i].mat) {
      z[e.block](e.row, e.col) += yi * e.value;
      if (e.row != e.col) z[e.block](e.col, e.row) += yi * e.value;
    }
    for (const auto& [j, v] : p.constraints[i].free_coeffs) bty[j] += yi * v;
  }
  double lmin = 0;
  for (auto& zk : z) {
    zk = zk.scaled(-1.0);
    lmin = std::min(lmin, sym_min_eigenvalue(zk));
  }
  double fn = inf_norm(bty);
  if (min_eig) *min_eig = lmin;
  if (free_norm) *free_norm = fn;
  if (b_dot_y) *b_dot_y = by;
  // Certificate requires -A*(y) PSD, B^T y = 0, b^T y > 0.
  double viol = std::max(0.0, -lmin);
  viol = std::max(viol, fn);
  viol = std::max(viol, std::max(0.0, 1e-12 - by));
  return viol;
}

namespace {
SdpSolution solve_core(const SdpProblem& p_in, const SdpOptions& opts) {
  p_in.validate();
  SdpSolution sol;
  const std::size_t m_orig = p_in.constraints.size();

  // Free variables no constraint touches: pin them to zero (they would make
  // the reduced Newton system singular).  An unconstrained variable with a
  // nonzero objective coefficient means the objective is unbounded.
  SdpProblem p = p_in;
  {
    std::vector<bool> used(p.num_free, false);
    for (const auto& c : p.constraints)
      for (const auto& [j, v] : c.free_coeffs)
        if (v != 0.0) used[j] = true;
    std::vector<double> d(p.num_free, 0.0);
    for (const auto& [j, v] : p.obj_free) d[j] += v;
    for (int j = 0; j < p.num_free; ++j) {
      if (used[j]) continue;
      if (d[j] != 0.0) {
        sol.status = SdpStatus::NumericalFailure;
        sol.failure = "objective unbounded in unconstrained free variable " +
                      std::to_string(j);
        sol.blocks.clear();
        for (int s : p.block_sizes) sol.blocks.emplace_back(s);
        sol.free_values.assign(p.num_free, 0.0);
        sol.dual.assign(m_orig, 0.0);
        return sol;
      }
      SdpProblem::Constraint pin;
      pin.free_coeffs.emplace_back(j, 1.0);
      pin.rhs = 0.0;
      p.constraints.push_back(std::move(pin));
      sol.warnings.push_back("pinned unused free variable " +
                             std::to_string(j));
    }
  }

  const std::size_t nb = p.block_sizes.size();
  const int f = p.num_free;
  const std::size_t m_all = p.constraints.size();

  // ---- Rank-revealing row preprocessing (modified Gram-Schmidt). ----
  // Each constraint row is a vector over (upper-triangle block entries, theta).
  std::size_t dim = 0;
  std::vector<std::size_t> block_off(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    block_off[k] = dim;
    dim += static_cast<std::size_t>(p.block_sizes[k]) *
           (p.block_sizes[k] + 1) / 2;
  }
  const std::size_t theta_off = dim;
  dim += f;
  auto row_vec = [&](std::size_t i) {
    std::vector<double> v(dim, 0.0);
    for (const auto& e : p.constraints[i].mat) {
      int s = p.block_sizes[e.block];
      std::size_t idx = block_off[e.block];
      // upper-triangle linear index of (row, col), row <= col
      idx += static_cast<std::size_t>(e.row) * s -
             static_cast<std::size_t>(e.row) * (e.row - 1) / 2 +
             (e.col - e.row);
      // Weight off-diagonals by sqrt(2) so the Euclidean inner product of
      // row vectors equals <A_i, A_j>.
      v[idx] += e.value * (e.row == e.col ? 1.0 : std::sqrt(2.0));
    }
    for (const auto& [j, c] : p.constraints[i].free_coeffs)
      v[theta_off + j] += c;
    return v;
  };

  Work w(p);
  std::vector<std::vector<double>> basis;       // orthonormal rows
  std::vector<std::vector<double>> basis_comb;  // expansion over original rows
  std::vector<double> basis_rhs;
  for (std::size_t i = 0; i < m_all; ++i) {
    std::vector<double> v = row_vec(i);
    std::vector<double> comb(m_all, 0.0);
    comb[i] = 1.0;
    double rhs = p.constraints[i].rhs;
    double norm0 = 0;
    for (double x : v) norm0 += x * x;
    norm0 = std::sqrt(norm0);
    for (std::size_t q = 0; q < basis.size(); ++q) {
      double c = 0;
      for (std::size_t t = 0; t < dim; ++t) c += v[t] * basis[q][t];
      if (c == 0.0) continue;
      for (std::size_t t = 0; t < dim; ++t) v[t] -= c * basis[q][t];
      for (std::size_t t = 0; t < m_all; ++t) comb[t] -= c * basis_comb[q][t];
      rhs -= c * basis_rhs[q];
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm <= opts.pivot_tol * (1.0 + norm0)) {
      if (std::abs(rhs) > 1e3 * opts.pivot_tol * (1.0 + std::abs(p.constraints[i].rhs))) {
        // Inconsistent dependent row: the combination is itself a Farkas
        // certificate (A*(y) = 0, B^T y = 0, b^T y = rhs != 0).
        sol.status = SdpStatus::Infeasible;
        sol.ray.assign(m_all, 0.0);
        for (std::size_t t = 0; t < m_all; ++t) sol.ray[t] = comb[t] / rhs;
        sdp_verify_ray(p, sol.ray, &sol.ray_min_eig, &sol.ray_free_norm, nullptr);
        sol.warnings.push_back("inconsistent dependent constraint row " +
                               std::to_string(i));
        sol.blocks.clear();
        for (std::size_t k = 0; k < nb; ++k)
          sol.blocks.emplace_back(p.block_sizes[k]);
        sol.free_values.assign(f, 0.0);
        sol.dual.assign(m_orig, 0.0);
        sol.ray.resize(m_orig);
        return sol;
      }
      sol.warnings.push_back("dropped dependent constraint row " +
                             std::to_string(i));
      continue;
    }
    for (double& x : v) x /= norm;
    for (double& x : comb) x /= norm;
    rhs /= norm;
    basis.push_back(std::move(v));
    basis_comb.push_back(std::move(comb));
    basis_rhs.push_back(rhs);
    w.rows.push_back(static_cast<int>(i));
  }
  const std::size_t m = w.rows.size();

  std::vector<double> b(m);
  for (std::size_t i = 0; i < m; ++i) b[i] = p.constraints[w.rows[i]].rhs;
  std::vector<Mat> C(nb);
  for (std::size_t k = 0; k < nb; ++k)
    C[k] = assemble(p.obj_mat, static_cast<int>(k), p.block_sizes[k]);
  std::vector<double> d(f, 0.0);
  for (const auto& [j, v] : p.obj_free) d[j] += v;

  double data_scale = 1.0;
  for (const auto& c : p.constraints)
    for (const auto& e : c.mat) data_scale = std::max(data_scale, std::abs(e.value));

  // Degenerate corner: no constraints at all.
  if (m == 0) {
    sol.status = SdpStatus::Feasible;
    sol.blocks.resize(nb);
    for (std::size_t k = 0; k < nb; ++k) sol.blocks[k] = Mat(p.block_sizes[k]);
    sol.free_values.assign(f, 0.0);
    sol.dual.assign(m_orig, 0.0);
    sol.objective = 0;
    return sol;
  }

  // ---- Interior-point state. ----
  std::vector<Mat> X(nb), S(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    X[k] = Mat::identity(p.block_sizes[k], opts.init_radius);
    S[k] = Mat::identity(p.block_sizes[k], opts.init_radius);
  }
  std::vector<double> theta(f, 0.0), y(m, 0.0);
  double total_dim = 0;
  for (std::size_t k = 0; k < nb; ++k) total_dim += p.block_sizes[k];
  if (total_dim == 0) {
    // Pure linear system in theta: solve the orthonormalized system.
    std::vector<double> th(f, 0.0);
    for (std::size_t q = 0; q < basis.size(); ++q)
      for (int j = 0; j < f; ++j) th[j] += basis_rhs[q] * basis[q][theta_off + j];
    sol.free_values = th;
    sol.blocks.clear();
    sol.dual.assign(m_orig, 0.0);
    double res = 0;
    for (std::size_t i = 0; i < m; ++i) {
      double lhs = 0;
      for (const auto& [j, v] : p.constraints[w.rows[i]].free_coeffs)
        lhs += v * th[j];
      res = std::max(res, std::abs(lhs - b[i]));
    }
    sol.primal_residual = res;
    sol.status = res <= opts.tol_primal * (1 + inf_norm(b))
                     ? SdpStatus::Feasible
                     : SdpStatus::Infeasible;
    return sol;
  }

  double bnorm = inf_norm(b);
  double cnorm = 0;
  for (const auto& ck : C) cnorm = std::max(cnorm, ck.max_abs());
  for (double v : d) cnorm = std::max(cnorm, std::abs(v));

  auto primal_objective = [&] {
    double s = 0;
    for (std::size_t k = 0; k < nb; ++k) s += dot(C[k], X[k]);
    for (int j = 0; j < f; ++j) s += d[j] * theta[j];
    return s;
  };

  std::vector<Mat> Sinv(nb), Rd(nb), dualA(nb);
  std::vector<Mat> dX(nb), dS(nb), dXa(nb), dSa(nb);

  // Best-scored iterate so far: on degenerate optimal faces the iteration
  // can thrash near the solution without ever meeting the joint tolerance,
  // so the final polish runs on the best point seen, not on the last one.
  std::vector<Mat> Xbest = X, Sbest = S;
  std::vector<double> theta_best = theta, y_best = y;
  double best_score = 1e300;
  int stalled = 0;

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    // Residuals.
    std::vector<double> rp(m);
    for (std::size_t i = 0; i < m; ++i)
      rp[i] = b[i] - w.a_dot(static_cast<int>(i), X) - w.b_theta(static_cast<int>(i), theta);
    w.accumulate_dual(y, dualA);
    double dres = 0;
    for (std::size_t k = 0; k < nb; ++k) {
      Rd[k] = C[k] - S[k] - dualA[k];
      dres = std::max(dres, Rd[k].max_abs());
    }
    std::vector<double> rf(f, 0.0);
    for (int j = 0; j < f; ++j) rf[j] = d[j];
    for (std::size_t i = 0; i < m; ++i)
      for (const auto& [j, v] : p.constraints[w.rows[i]].free_coeffs)
        rf[j] -= v * y[i];
    double mu = 0;
    for (std::size_t k = 0; k < nb; ++k) mu += dot(X[k], S[k]);
    mu /= total_dim;

    double pobj = primal_objective();
    double dobj = 0;
    for (std::size_t i = 0; i < m; ++i) dobj += b[i] * y[i];
    sol.objective_log.push_back(pobj);

    double rel_p = inf_norm(rp) / (1 + bnorm);
    double rel_d = (dres + inf_norm(rf)) / (1 + cnorm);
    double rel_g = std::abs(pobj - dobj) / (1 + std::abs(pobj) + std::abs(dobj));

    if (opts.trace)
      std::fprintf(stderr,
                   "iter %3d  mu %.3e  rel_p %.3e  rel_d %.3e  rel_g %.3e  "
                   "pobj %.12g  dobj %.12g\n",
                   iter, mu, rel_p, rel_d, rel_g, pobj, dobj);

    double score = std::max({rel_p, rel_d, mu / (1 + std::abs(pobj))});
    if (score < best_score * (1 - 1e-9)) {
      best_score = score;
      Xbest = X;
      Sbest = S;
      theta_best = theta;
      y_best = y;
      stalled = 0;
    } else {
      ++stalled;
    }

    if (rel_p <= opts.tol_primal && rel_d <= opts.tol_dual &&
        rel_g <= opts.tol_gap) {
      sol.status = SdpStatus::Feasible;
      sol.iterations = iter;
      break;
    }
    if (stalled >= 20 && best_score <= 1e3 * opts.tol_primal) {
      // Thrashing around an already near-feasible point (degenerate optimal
      // face); hand the best iterate to the polish below.
      sol.status = SdpStatus::MaxIter;
      sol.iterations = iter;
      break;
    }

    // Primal infeasibility: normalized dual improving ray.  The tolerance is
    // absolute in the certificate inequality (b.y = 1): a large-norm ray with
    // a proportionally small defect is drift along a recession direction,
    // not evidence.
    if (dobj > 1.0) {
      std::vector<double> ray(m_all, 0.0);
      for (std::size_t i = 0; i < m; ++i) ray[w.rows[i]] = y[i] / dobj;
      double lmin = 0, fn = 0;
      sdp_verify_ray(p, ray, &lmin, &fn, nullptr);
      double tol = opts.tol_ray * data_scale;
      if (lmin >= -tol && fn <= tol) {
        sol.status = SdpStatus::Infeasible;
        sol.ray = std::move(ray);
        sol.ray_min_eig = lmin;
        sol.ray_free_norm = fn;
        sol.iterations = iter;
        break;
      }
    }

    // Factor S and the Schur complement.
    bool ok = true;
    for (std::size_t k = 0; k < nb; ++k) {
      Mat lower;
      if (!cholesky(S[k], lower)) {
        ok = false;
        break;
      }
      Sinv[k] = chol_inverse(lower);
      Sinv[k].symmetrize();
    }
    if (!ok) {
      if (rel_p <= opts.tol_primal) {
        sol.status = SdpStatus::Feasible;
        sol.warnings.push_back(
            "terminated at a degenerate dual block; primal-feasible point");
      } else {
        sol.status = SdpStatus::NumericalFailure;
        sol.failure = "Cholesky breakdown on dual block";
      }
      sol.iterations = iter;
      break;
    }

    // M_ij = sum_k <A_i, X A_j Sinv>, g as derived from the HKM direction.
    Mat M(m);
    std::vector<std::vector<Mat>> T(m, std::vector<Mat>(nb));
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < nb; ++k) {
        Mat Aj = assemble(p.constraints[w.rows[j]].mat, static_cast<int>(k),
                          p.block_sizes[k]);
        T[j][k] = X[k] * Aj * Sinv[k];
      }
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        double s = 0;
        for (std::size_t k = 0; k < nb; ++k)
          s += sparse_dot(p.constraints[w.rows[i]].mat, static_cast<int>(k),
                          T[j][k]);
        M(i, j) = s;
      }
    M.symmetrize();
    // Augmented system [[M, B], [B^T, 0]]: LU copes with rows whose matrix
    // part is empty (pure theta rows), where eliminating through M cannot.
    Mat kkt(m + f);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) kkt(i, j) = M(i, j);
    for (std::size_t i = 0; i < m; ++i)
      for (const auto& [j, v] : p.constraints[w.rows[i]].free_coeffs) {
        kkt(i, m + j) += v;
        kkt(m + j, i) += v;
      }

    auto solve_kkt = [&](const std::vector<double>& g,
                         const std::vector<double>& rft,
                         std::vector<double>& dy, std::vector<double>& dth) {
      std::vector<double> rhs(m + f, 0.0);
      for (std::size_t i = 0; i < m; ++i) rhs[i] = g[i];
      for (int j = 0; j < f; ++j) rhs[m + j] = rft[j];
      std::vector<double> x;
      if (!lu_solve(kkt, rhs, x)) {
        // Near the boundary M can lose rank; one shot of ridge regularization.
        double ridge = 1e-12 * (1.0 + M.trace() / m);
        for (std::size_t i = 0; i < m; ++i) kkt(i, i) += ridge;
        if (!lu_solve(kkt, rhs, x)) return false;
      }
      dy.assign(x.begin(), x.begin() + m);
      dth.assign(x.begin() + m, x.end());
      return true;
    };

    auto direction = [&](const std::vector<Mat>& Rc, std::vector<Mat>& dXo,
                         std::vector<Mat>& dSo, std::vector<double>& dyo,
                         std::vector<double>& dtho) {
      std::vector<double> g(m);
      for (std::size_t i = 0; i < m; ++i) {
        double s = rp[i];
        for (std::size_t k = 0; k < nb; ++k) {
          Mat tmp = Rc[k] * Sinv[k];
          s -= sparse_dot(p.constraints[w.rows[i]].mat, static_cast<int>(k), tmp);
          Mat tmp2 = X[k] * Rd[k] * Sinv[k];
          s += sparse_dot(p.constraints[w.rows[i]].mat, static_cast<int>(k), tmp2);
        }
        g[i] = s;
      }
      if (!solve_kkt(g, rf, dyo, dtho)) return false;
      w.accumulate_dual(dyo, dualA);
      for (std::size_t k = 0; k < nb; ++k) {
        dSo[k] = Rd[k] - dualA[k];
        dXo[k] = Rc[k] * Sinv[k] - X[k] * dSo[k] * Sinv[k];
        dXo[k].symmetrize();
      }
      return true;
    };

    // Predictor (affine scaling).
    std::vector<Mat> Rc(nb);
    for (std::size_t k = 0; k < nb; ++k) Rc[k] = (X[k] * S[k]).scaled(-1.0);
    std::vector<double> dya, dtha;
    if (!direction(Rc, dXa, dSa, dya, dtha)) {
      if (rel_p <= opts.tol_primal) {
        // Converged primal-feasible point; the Newton system degenerated at
        // the boundary before the gap criterion fired.
        sol.status = SdpStatus::Feasible;
        sol.warnings.push_back(
            "terminated at a singular Newton system; primal-feasible point");
      } else {
        sol.status = SdpStatus::NumericalFailure;
        sol.failure = "singular reduced system";
      }
      sol.iterations = iter;
      break;
    }
    double ap = 1.0, ad = 1.0;
    for (std::size_t k = 0; k < nb; ++k) {
      ap = std::min(ap, max_psd_step(X[k], dXa[k], 1.0));
      ad = std::min(ad, max_psd_step(S[k], dSa[k], 1.0));
    }
    double mu_aff = 0;
    for (std::size_t k = 0; k < nb; ++k) {
      Mat xa = X[k];
      xa.axpy(ap, dXa[k]);
      Mat sa = S[k];
      sa.axpy(ad, dSa[k]);
      mu_aff += dot(xa, sa);
    }
    mu_aff /= total_dim;
    double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);

    // Corrector.
    for (std::size_t k = 0; k < nb; ++k) {
      Rc[k] = Mat::identity(p.block_sizes[k], sigma * mu);
      Rc[k].axpy(-1.0, X[k] * S[k]);
      Rc[k].axpy(-1.0, dXa[k] * dSa[k]);
    }
    std::vector<double> dy, dth;
    if (!direction(Rc, dX, dS, dy, dth)) {
      if (rel_p <= opts.tol_primal) {
        sol.status = SdpStatus::Feasible;
        sol.warnings.push_back(
            "terminated at a singular Newton system; primal-feasible point");
      } else {
        sol.status = SdpStatus::NumericalFailure;
        sol.failure = "singular reduced system";
      }
      sol.iterations = iter;
      break;
    }
    double sp = 1.0, sd = 1.0;
    for (std::size_t k = 0; k < nb; ++k) {
      sp = std::min(sp, opts.step_fraction * max_psd_step(X[k], dX[k], 1.0 / opts.step_fraction));
      sd = std::min(sd, opts.step_fraction * max_psd_step(S[k], dS[k], 1.0 / opts.step_fraction));
    }
    sp = std::min(sp, 1.0);
    sd = std::min(sd, 1.0);
    // The eigenvalue-based step bound can overshoot on ill-conditioned
    // blocks; certify factorability and back off until it holds, so the
    // iterates stay strictly inside the cone.
    auto certified_step = [&](const std::vector<Mat>& base,
                              const std::vector<Mat>& dir, double alpha) {
      for (int back = 0; back < 40 && alpha > 0; ++back) {
        bool ok = true;
        for (std::size_t k = 0; k < nb && ok; ++k) {
          Mat trial = base[k];
          trial.axpy(alpha, dir[k]);
          Mat lower;
          ok = cholesky(trial, lower);
        }
        if (ok) return alpha;
        alpha *= 0.5;
      }
      return 0.0;
    };
    sp = certified_step(X, dX, sp);
    sd = certified_step(S, dS, sd);
    for (std::size_t k = 0; k < nb; ++k) {
      X[k].axpy(sp, dX[k]);
      S[k].axpy(sd, dS[k]);
    }
    for (int j = 0; j < f; ++j) theta[j] += sp * dth[j];
    for (std::size_t i = 0; i < m; ++i) y[i] += sd * dy[i];
    sol.iterations = iter + 1;
  }

  if (sol.status != SdpStatus::Feasible && sol.status != SdpStatus::Infeasible &&
      sol.failure.empty() && sol.iterations >= opts.max_iter)
    sol.status = SdpStatus::MaxIter;

  if (sol.status != SdpStatus::Infeasible) {
    X = Xbest;
    S = Sbest;
    theta = theta_best;
    y = y_best;
  }

  // Final polish: alternate projection onto the constraint subspace (through
  // the orthonormal row basis) and onto the cone (eigenvalue clipping).
  // Fully determined Grams and degenerate optimal faces leave the iteration
  // stranded just outside tolerance; when the problem is feasible the
  // alternation converges onto the intersection, and the independent
  // re-verification below decides whether to accept the result.
  if (sol.status != SdpStatus::Infeasible && !basis.empty()) {
    const double sqrt2 = std::sqrt(2.0);
    auto affine_project = [&] {
      std::vector<double> v(dim, 0.0);
      for (std::size_t k = 0; k < nb; ++k) {
        std::size_t idx = block_off[k];
        for (int i = 0; i < p.block_sizes[k]; ++i)
          for (int j = i; j < p.block_sizes[k]; ++j)
            v[idx++] = i == j ? X[k](i, j) : sqrt2 * X[k](i, j);
      }
      for (int j = 0; j < f; ++j) v[theta_off + j] = theta[j];
      for (std::size_t q = 0; q < basis.size(); ++q) {
        double defect = basis_rhs[q];
        for (std::size_t t = 0; t < dim; ++t) defect -= basis[q][t] * v[t];
        if (defect == 0.0) continue;
        for (std::size_t t = 0; t < dim; ++t) v[t] += defect * basis[q][t];
      }
      for (std::size_t k = 0; k < nb; ++k) {
        std::size_t idx = block_off[k];
        for (int i = 0; i < p.block_sizes[k]; ++i)
          for (int j = i; j < p.block_sizes[k]; ++j) {
            double val = i == j ? v[idx] : v[idx] / sqrt2;
            X[k](i, j) = val;
            X[k](j, i) = val;
            ++idx;
          }
      }
      for (int j = 0; j < f; ++j) theta[j] = v[theta_off + j];
    };
    auto min_eig = [&] {
      double lmin = 0;
      for (std::size_t k = 0; k < nb; ++k)
        lmin = std::min(lmin, sym_min_eigenvalue(X[k]));
      return lmin;
    };
    auto clip_psd = [&] {
      for (std::size_t k = 0; k < nb; ++k) {
        std::vector<double> vals;
        Mat vecs;
        sym_eigen(X[k], vals, &vecs);
        if (vals.front() >= 0) continue;
        const std::size_t s = X[k].size();
        Mat rebuilt(s);
        for (std::size_t v2 = 0; v2 < s; ++v2) {
          double lam = std::max(0.0, vals[v2]);
          if (lam == 0.0) continue;
          for (std::size_t i = 0; i < s; ++i)
            for (std::size_t j = 0; j < s; ++j)
              rebuilt(i, j) += lam * vecs(i, v2) * vecs(j, v2);
        }
        X[k] = rebuilt;
      }
    };
    affine_project();
    for (int round = 0; round < 60; ++round) {
      if (min_eig() >= -opts.tol_eig * 0.1) break;
      clip_psd();
      affine_project();
    }
  }

  // Final report (for any terminal status).
  sol.blocks = X;
  sol.free_values = theta;
  sol.dual.assign(m_all, 0.0);
  for (std::size_t i = 0; i < m; ++i) sol.dual[w.rows[i]] = y[i];
  sol.objective = primal_objective();
  double res = 0;
  for (std::size_t i = 0; i < m_all; ++i) {
    double lhs = 0;
    for (std::size_t k = 0; k < nb; ++k)
      lhs += sparse_dot(p.constraints[i].mat, static_cast<int>(k), X[k]);
    for (const auto& [j, v] : p.constraints[i].free_coeffs)
      lhs += v * theta[j];
    res = std::max(res, std::abs(lhs - p.constraints[i].rhs));
  }
  sol.primal_residual = res;
  double dres = 0;
  w.accumulate_dual(y, dualA);
  for (std::size_t k = 0; k < nb; ++k)
    dres = std::max(dres, (C[k] - S[k] - dualA[k]).max_abs());
  sol.dual_residual = dres;
  // Never report Feasible on the solver's word alone; conversely, accept a
  // stalled iterate whose polished point independently verifies.
  {
    SdpCheck check = sdp_verify(p, sol);
    if (sol.status == SdpStatus::Feasible &&
        !check.feasible(opts.tol_primal * (1 + bnorm) * 10, opts.tol_eig)) {
      sol.status = SdpStatus::NumericalFailure;
      sol.failure = "converged point failed independent re-verification";
    } else if ((sol.status == SdpStatus::MaxIter ||
                sol.status == SdpStatus::NumericalFailure) &&
               check.feasible(opts.tol_primal * (1 + bnorm), opts.tol_eig)) {
      sol.status = SdpStatus::Feasible;
      sol.failure.clear();
      sol.warnings.push_back(
          "affine polish recovered a verified feasible point");
    }
  }
  // Pin rows are internal; report duals and rays in caller indexing.
  sol.dual.resize(m_orig);
  if (!sol.ray.empty()) sol.ray.resize(m_orig);
  return sol;
}
}  // namespace

SdpSolution sdp_solve(const SdpProblem& p, const SdpOptions& opts) {
  SdpSolution first = solve_core(p, opts);
  if (first.status == SdpStatus::Feasible ||
      first.status == SdpStatus::Infeasible)
    return first;
  // Inconclusive end state: retry deterministically from other starting
  // radii before giving up; hard-degenerate instances often converge from a
  // different central-path neighborhood.
  for (double scale : {0.04, 25.0}) {
    SdpOptions retry_opts = opts;
    retry_opts.init_radius = opts.init_radius * scale;
    SdpSolution retry = solve_core(p, retry_opts);
    if (retry.status == SdpStatus::Feasible ||
        retry.status == SdpStatus::Infeasible) {
      retry.warnings.push_back("restarted with initial radius scaled by " +
                               std::to_string(scale));
      return retry;
    }
  }
  return first;
}

}  // namespace agstab
