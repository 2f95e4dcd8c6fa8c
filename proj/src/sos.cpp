#include "agstab/sos.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace agstab {

namespace {

void enumerate(std::size_t n, int lo, int hi, const std::vector<int>& box,
               Monomial& cur, std::size_t axis, int deg,
               std::vector<Monomial>& out) {
  if (axis == n) {
    if (deg >= lo) out.push_back(cur);
    return;
  }
  for (int e = 0; e <= box[axis] && deg + e <= hi; ++e) {
    cur[axis] = e;
    enumerate(n, lo, hi, box, cur, axis + 1, deg + e, out);
  }
  cur[axis] = 0;
}

double max_abs_coeff(const FPolynomial& p) {
  double s = 0;
  for (const auto& [m, c] : p.terms()) s = std::max(s, std::abs(c));
  return s;
}

}  // namespace

std::vector<Monomial> sos_basis(std::span<const FPolynomial> targets,
                                int extra_degree) {
  std::size_t n = 0;
  int maxdeg = 0;
  int mindeg = -1;
  std::vector<int> box;
  bool any = false;
  for (const auto& t : targets) {
    if (t.is_zero()) continue;
    if (!any) {
      n = t.dim();
      box.assign(n, 0);
      any = true;
    }
    maxdeg = std::max(maxdeg, t.total_degree());
    mindeg = mindeg < 0 ? t.min_degree() : std::min(mindeg, t.min_degree());
    for (std::size_t i = 0; i < n; ++i)
      box[i] = std::max(box[i], (t.max_exponent(i) + 1) / 2);
  }
  if (!any) return {};
  int hi = (maxdeg + 1) / 2 + extra_degree;
  int lo = std::max(0, mindeg / 2 - extra_degree);
  for (auto& b : box) b = std::min(b + extra_degree, hi);
  std::vector<Monomial> out;
  Monomial cur(n);
  enumerate(n, lo, hi, box, cur, 0, 0, out);
  std::sort(out.begin(), out.end(), GrlexLess{});
  return out;
}

GramIncidence gram_incidence(const std::vector<Monomial>& basis) {
  GramIncidence inc;
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = i; j < basis.size(); ++j)
      inc[basis[i] * basis[j]].push_back(
          {static_cast<int>(i), static_cast<int>(j)});
  return inc;
}

namespace {

// Shared assembly: one main Gram block (+ optional multiplier blocks), free
// parameters theta, coefficient-matching rows.
SosProblem assemble(FPolynomial n0, std::vector<FPolynomial> nj,
                    const std::vector<StructuralConstraint>& structural,
                    std::vector<FPolynomial> gs,
                    const std::vector<int>& mult_degrees, int degree_cap,
                    int extra_degree = 0) {
  SosProblem out;
  out.n0 = n0;
  out.nj = nj;
  out.mult_gs = gs;
  const std::size_t dim = n0.dim();

  std::vector<FPolynomial> shape_targets;
  shape_targets.push_back(n0);
  for (const auto& p : nj) shape_targets.push_back(p);
  out.basis = sos_basis(shape_targets, extra_degree);

  // Presolve for the plain feasibility case: a product monomial with zero
  // target coefficient whose only surviving contribution is one squared
  // basis element pins that element's diagonal to zero, so the element can
  // never appear in a PSD Gram.  Dropping such elements (to a fixpoint)
  // removes empty-interior facets that otherwise stall the interior point.
  if (nj.empty() && gs.empty() && !out.basis.empty()) {
    std::vector<bool> live(out.basis.size(), true);
    bool changed = true;
    while (changed) {
      changed = false;
      GramIncidence inc = gram_incidence(out.basis);
      for (const auto& [mono, pairs] : inc) {
        if (n0.coeff(mono) != 0.0) continue;
        int lone_diag = -1;
        bool has_offdiag = false;
        for (auto [i, j] : pairs) {
          if (!live[i] || !live[j]) continue;
          if (i == j)
            lone_diag = i;
          else
            has_offdiag = true;
        }
        if (!has_offdiag && lone_diag >= 0) {
          live[lone_diag] = false;
          changed = true;
        }
      }
    }
    std::vector<Monomial> kept;
    for (std::size_t i = 0; i < out.basis.size(); ++i)
      if (live[i]) kept.push_back(out.basis[i]);
    out.basis = std::move(kept);
  }

  // Scale rows to unit max coefficient of the affine family.
  double s = max_abs_coeff(n0);
  for (const auto& p : nj) s = std::max(s, max_abs_coeff(p));
  if (s == 0.0) s = 1.0;
  out.scale = s;

  out.sdp.num_free = static_cast<int>(nj.size());
  out.sdp.block_sizes.push_back(
      std::max<int>(1, static_cast<int>(out.basis.size())));

  // Multiplier bases: sigma_i of total degree mult_degrees[i].
  for (std::size_t i = 0; i < gs.size(); ++i) {
    int dg = gs[i].total_degree();
    if (dg < 0) throw std::invalid_argument("localized_sos: zero constraint");
    int want = mult_degrees.at(i);
    if (want % 2 != 0)
      throw OddDegree("localized_sos: multiplier degree must be even");
    if (want + dg > degree_cap)
      throw DegreeOverflow("localized_sos: product degree " +
                           std::to_string(want + dg) + " exceeds cap " +
                           std::to_string(degree_cap));
    std::vector<Monomial> mb;
    Monomial cur(dim);
    std::vector<int> box(dim, want / 2);
    enumerate(dim, 0, want / 2, box, cur, 0, 0, mb);
    std::sort(mb.begin(), mb.end(), GrlexLess{});
    out.mult_bases.push_back(std::move(mb));
    out.sdp.block_sizes.push_back(
        std::max<int>(1, static_cast<int>(out.mult_bases.back().size())));
  }

  // Row per product/support monomial.
  GramIncidence inc = gram_incidence(out.basis);
  std::map<Monomial, int, GrlexLess> row_of;
  auto row_for = [&](const Monomial& m) {
    auto it = row_of.find(m);
    if (it != row_of.end()) return it->second;
    int r = static_cast<int>(out.sdp.constraints.size());
    out.sdp.constraints.emplace_back();
    row_of.emplace(m, r);
    return r;
  };
  for (const auto& [mono, pairs] : inc) {
    int r = row_for(mono);
    for (auto [i, j] : pairs) out.sdp.add_entry(r, 0, i, j, 1.0);
  }
  for (std::size_t k = 0; k < gs.size(); ++k) {
    GramIncidence minc = gram_incidence(out.mult_bases[k]);
    for (const auto& [mono, pairs] : minc)
      for (const auto& [gm, gc] : gs[k].terms()) {
        int r = row_for(mono * gm);
        for (auto [i, j] : pairs)
          out.sdp.add_entry(r, static_cast<int>(k) + 1, i, j, gc);
      }
  }
  for (const auto& [m, c] : n0.terms()) row_for(m);
  for (const auto& p : nj)
    for (const auto& [m, c] : p.terms()) row_for(m);

  for (const auto& [mono, r] : row_of) {
    out.sdp.constraints[r].rhs = n0.coeff(mono) / s;
    for (std::size_t j = 0; j < nj.size(); ++j) {
      double c = nj[j].coeff(mono);
      if (c != 0.0)
        out.sdp.constraints[r].free_coeffs.emplace_back(static_cast<int>(j),
                                                        -c / s);
    }
  }

  // Structural rows live in true theta units.
  for (std::size_t a = 0; a < structural.size(); ++a) {
    for (std::size_t b2 = a + 1; b2 < structural.size(); ++b2) {
      // Proportional functionals with incompatible right-hand sides are a
      // modelling error worth rejecting before the solver sees them.
      const auto &ca = structural[a], &cb = structural[b2];
      auto na = ca.terms, nb2 = cb.terms;
      std::sort(na.begin(), na.end());
      std::sort(nb2.begin(), nb2.end());
      if (na.size() != nb2.size() || na.empty()) continue;
      bool same_support = true;
      for (std::size_t t = 0; t < na.size(); ++t)
        if (na[t].first != nb2[t].first) same_support = false;
      if (!same_support) continue;
      double ratio = nb2[0].second / na[0].second;
      bool proportional = true;
      for (std::size_t t = 0; t < na.size(); ++t)
        if (std::abs(nb2[t].second - ratio * na[t].second) >
            1e-12 * std::abs(nb2[t].second) + 1e-300)
          proportional = false;
      if (proportional &&
          std::abs(cb.rhs - ratio * ca.rhs) > 1e-9 * (1 + std::abs(cb.rhs)))
        throw InconsistentStructural(
            "structural constraints are proportional with different values");
    }
  }
  for (const auto& sc : structural) {
    int r = static_cast<int>(out.sdp.constraints.size());
    out.sdp.constraints.emplace_back();
    out.sdp.constraints[r].rhs = sc.rhs;
    for (auto [j, c] : sc.terms)
      out.sdp.constraints[r].free_coeffs.emplace_back(j, c);
  }

  // Trace objective keeps certificates small and selection deterministic.
  for (std::size_t k = 0; k < out.sdp.block_sizes.size(); ++k)
    for (int i = 0; i < out.sdp.block_sizes[k]; ++i)
      out.sdp.obj_mat.push_back({static_cast<int>(k), i, i, 1.0});
  return out;
}

}  // namespace

SosProblem build_sos_feasibility(const FPolynomial& n, int extra_degree) {
  if (!n.is_zero() && n.total_degree() % 2 != 0)
    throw OddDegree("sos: target has odd degree " +
                    std::to_string(n.total_degree()));
  return assemble(n, {}, {}, {}, {}, 0, extra_degree);
}

SosProblem build_sos_feasibility(const Polynomial& n, int extra_degree) {
  return build_sos_feasibility(to_float(n), extra_degree);
}

SosProblem build_parametric_sos(FPolynomial n0, std::vector<FPolynomial> nj,
                                const std::vector<StructuralConstraint>& structural) {
  return assemble(std::move(n0), std::move(nj), structural, {}, {}, 0);
}

SosProblem localized_sos(const FPolynomial& n, std::vector<FPolynomial> gs,
                         const std::vector<int>& mult_degrees, int degree_cap) {
  if (gs.size() != mult_degrees.size())
    throw std::invalid_argument("localized_sos: one degree per constraint");
  return assemble(n, {}, {}, std::move(gs), mult_degrees, degree_cap);
}

std::vector<std::pair<double, FPolynomial>> SosCertificate::squares(
    double clip) const {
  std::vector<std::pair<double, FPolynomial>> out;
  if (gram.size() == 0 || basis.empty()) return out;
  std::vector<double> vals;
  Mat vecs;
  sym_eigen(gram, vals, &vecs);
  const std::size_t n = basis.size();
  for (std::size_t v = n; v-- > 0;) {
    if (vals[v] <= clip) continue;
    FPolynomial p(basis[0].dim());
    for (std::size_t k = 0; k < n; ++k)
      if (vecs(k, v) != 0.0) p.add_term(basis[k], vecs(k, v));
    out.emplace_back(vals[v], p);
  }
  return out;
}

SosCertificate extract_certificate(const SosProblem& prob,
                                   const SdpSolution& sol) {
  SosCertificate cert;
  cert.basis = prob.basis;
  cert.params = sol.free_values;

  // Achieved target in true units.
  FPolynomial target = prob.n0;
  for (std::size_t j = 0; j < prob.nj.size(); ++j) {
    FPolynomial scaled(prob.nj[j].dim());
    for (const auto& [m, c] : prob.nj[j].terms())
      scaled.add_term(m, c * sol.free_values[j]);
    target = target + scaled;
  }
  double s = max_abs_coeff(target);
  if (s == 0.0) s = 1.0;

  // Unscale Gram blocks.
  cert.gram = sol.blocks.empty() ? Mat() : sol.blocks[0].scaled(prob.scale);
  for (std::size_t k = 0; k < prob.mult_bases.size(); ++k)
    cert.mult_grams.push_back(sol.blocks[k + 1].scaled(prob.scale));

  // Residual from scratch: coefficients of z^T Q z (+ multipliers) minus the
  // target, each bucket summed in sorted order.
  std::map<Monomial, std::vector<double>, GrlexLess> buckets;
  auto add = [&](const Monomial& m, double v) {
    if (v != 0.0) buckets[m].push_back(v);
  };
  if (!prob.basis.empty()) {
    for (std::size_t i = 0; i < prob.basis.size(); ++i)
      for (std::size_t j = i; j < prob.basis.size(); ++j) {
        double q = cert.gram(i, j);
        add(prob.basis[i] * prob.basis[j], i == j ? q : 2 * q);
      }
  }
  for (std::size_t k = 0; k < prob.mult_bases.size(); ++k) {
    const auto& mb = prob.mult_bases[k];
    for (std::size_t i = 0; i < mb.size(); ++i)
      for (std::size_t j = i; j < mb.size(); ++j) {
        double q = cert.mult_grams[k](i, j) * (i == j ? 1.0 : 2.0);
        if (q == 0.0) continue;
        for (const auto& [gm, gc] : prob.mult_gs[k].terms())
          add(mb[i] * mb[j] * gm, q * gc);
      }
  }
  for (const auto& [m, c] : target.terms()) add(m, -c);
  double residual = 0;
  for (auto& [m, vals] : buckets) {
    std::sort(vals.begin(), vals.end());
    double acc = 0;
    for (double v : vals) acc += v;
    residual = std::max(residual, std::abs(acc));
  }
  cert.residual = residual / s;
  double lmin = cert.gram.size() ? sym_min_eigenvalue(cert.gram) : 0.0;
  for (const auto& g : cert.mult_grams)
    if (g.size()) lmin = std::min(lmin, sym_min_eigenvalue(g));
  cert.min_eig = lmin / s;
  return cert;
}

std::string SosProblem::describe(std::span<const std::string> names) const {
  std::ostringstream out;
  out << "sos problem: gram block " << basis.size() << "x" << basis.size()
      << ", " << nj.size() << " parameters, " << sdp.constraints.size()
      << " coefficient rows, scale " << scale << "\n";
  out << "basis:";
  for (const auto& m : basis) out << " " << m.to_string(names);
  out << "\n";
  for (std::size_t k = 0; k < mult_bases.size(); ++k) {
    out << "multiplier " << k << " (deg " << mult_gs[k].total_degree()
        << " constraint), basis:";
    for (const auto& m : mult_bases[k]) out << " " << m.to_string(names);
    out << "\n";
  }
  for (std::size_t r = 0; r < sdp.constraints.size(); ++r) {
    out << "  row " << r << ": " << sdp.constraints[r].mat.size()
        << " gram entries";
    if (!sdp.constraints[r].free_coeffs.empty())
      out << ", " << sdp.constraints[r].free_coeffs.size() << " theta coeffs";
    out << ", rhs " << sdp.constraints[r].rhs << "\n";
  }
  return out.str();
}

}  // namespace agstab
