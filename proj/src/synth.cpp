#include "agstab/synth.hpp"

#include <algorithm>
#include <cmath>

namespace agstab {

std::string to_string(CertMode m) {
  switch (m) {
    case CertMode::Stabilize: return "stabilize";
    case CertMode::Escape: return "escape";
    case CertMode::InvariantSet: return "invariant-set";
  }
  return "?";
}

std::string to_string(CertVerdict v) {
  switch (v) {
    case CertVerdict::Certified: return "certified";
    case CertVerdict::NotCertified: return "not-certified";
    case CertVerdict::Marginal: return "marginal";
  }
  return "?";
}

ControlledSdeSystem::ControlledSdeSystem(SdeSystem sys,
                                         std::vector<BExpr> channel)
    : plant(std::move(sys)), control_channel(std::move(channel)) {
  if (control_channel.size() != plant.dim())
    throw DimensionMismatch("ControlledSdeSystem: channel length");
  for (const auto& e : control_channel)
    if (e.base() != plant.base())
      throw BaseMismatch("ControlledSdeSystem: channel base");
}

std::string CertificateResult::density_text(
    std::span<const std::string> names) const {
  if (!density) return "";
  std::string out = "(" + poly_to_string(density->a, names) + ") * (" +
                    poly_to_string(density->b, names) + ")^(" +
                    (-density->gamma).to_string() + ")";
  return out;
}

std::string CertificateResult::control_text(std::span<const std::string> names,
                                            int sig_figs) const {
  if (!has_control) return "";
  FPolynomial c = rounded_coefficients(control_numerator, sig_figs);
  FPolynomial a = rounded_coefficients(control_denominator, sig_figs);
  std::string num = poly_to_string(c, names);
  if (a.num_terms() == 1 && a.total_degree() == 0) {
    double lam = a.coeff(Monomial(a.dim()));
    if (lam == 1.0) return num;
  }
  return "(" + num + ") / (" + poly_to_string(a, names) + ")";
}

namespace {

// Side-condition bundle shared by the verification entry points.
void attach_density_conditions(CertificateResult& out, const SdeSystem& sys,
                               const DensityCandidate& density, CertMode mode,
                               const VerifyOptions& opts) {
  std::vector<Rational> origin(sys.dim(), Rational(0));

  {
    ConditionReport shape;
    shape.name = "density_shape(" + to_string(mode) + ")";
    bool singular_at_origin =
        density.gamma.signum() > 0 && density.b.eval(origin).is_zero();
    bool finite_everywhere = density.gamma.signum() <= 0 ||
                             !density.b.eval(origin).is_zero();
    if (mode == CertMode::Stabilize) {
      shape.details.push_back(
          {"D singular at the origin", singular_at_origin ? "yes" : "no",
           singular_at_origin ? "ok" : "expected a pole at 0 in this mode"});
      shape.verdict = singular_at_origin ? Verdict::Holds : Verdict::Marginal;
    } else if (mode == CertMode::Escape) {
      // Finite everywhere, C2, and non-integrable.
      bool base_positive = false;
      if (!density.b.eval(origin).is_zero()) {
        auto pos = positivity_on_sphere(density.b);
        base_positive = pos.kind != SpherePositivity::Kind::FoundZero &&
                        density.b.eval(origin).signum() > 0;
      }
      bool c2 = density.gamma.is_integer() ? true : base_positive;
      finite_everywhere = finite_everywhere && (density.gamma.signum() <= 0
                                                    ? true
                                                    : base_positive);
      shape.details.push_back({"D finite everywhere",
                               finite_everywhere ? "yes" : "no",
                               finite_everywhere ? "ok" : "violated"});
      shape.details.push_back(
          {"D twice continuously differentiable", c2 ? "yes" : "unverified",
           c2 ? "ok" : "fractional power over a vanishing base"});
      shape.verdict = (finite_everywhere && c2) ? Verdict::Holds : Verdict::Fails;
    } else {
      shape.details.push_back(
          {"domain", "invariant set", "D only needs C2 on the set closure"});
      shape.verdict = Verdict::Holds;
    }
    out.conditions.push_back(std::move(shape));
  }

  {
    ConditionReport eq;
    eq.name = "equilibrium_at_origin";
    eq.verdict = sys.equilibrium_at_origin() ? Verdict::Holds
                                             : Verdict::Inconclusive;
    eq.details.push_back({"all fields vanish at 0",
                          sys.equilibrium_at_origin() ? "verified" : "not asserted",
                          ""});
    out.conditions.push_back(std::move(eq));
  }

  if (mode != CertMode::InvariantSet) {
    try {
      ConditionReport integ = check_integrability(density, std::nullopt);
      if (mode == CertMode::Escape) {
        // Escape certificates need a NON-integrable density.
        ConditionReport flipped;
        flipped.name = "non_integrability(D)";
        flipped.details = integ.details;
        switch (integ.verdict) {
          case Verdict::Fails: flipped.verdict = Verdict::Holds; break;
          case Verdict::Holds: flipped.verdict = Verdict::Fails; break;
          default: flipped.verdict = integ.verdict;
        }
        out.conditions.push_back(std::move(flipped));
      } else {
        out.conditions.push_back(std::move(integ));
      }
    } catch (const BaseVanishesOffOrigin& e) {
      ConditionReport bad;
      bad.name = "integrability(D)";
      bad.verdict = Verdict::Fails;
      bad.details.push_back({"base positivity", "vanishes off the origin",
                             e.what()});
      out.conditions.push_back(std::move(bad));
    }
  } else {
    ConditionReport inv;
    inv.name = "backward_invariance";
    inv.verdict = Verdict::Inconclusive;
    inv.details.push_back(
        {"set is backward invariant", "user-asserted", "not verified here"});
    out.conditions.push_back(std::move(inv));
  }

  out.conditions.push_back(check_lipschitz(sys));

  // Polynomial systems: growth exponents for the time-change route, plus the
  // combined integrability test at the smallest admissible p.
  bool polynomial = true;
  for (const auto& e : sys.drift()) polynomial = polynomial && e.is_polynomial();
  for (const auto& col : sys.noise())
    for (const auto& e : col) polynomial = polynomial && e.is_polynomial();
  if (polynomial) {
    std::optional<int> good_p;
    ConditionReport growth;
    for (int p = 1; p <= opts.growth_p_max && !good_p; ++p) {
      growth = check_growth(sys, p);
      if (growth.verdict == Verdict::Holds) good_p = p;
    }
    out.conditions.push_back(growth);
    if (good_p && mode == CertMode::Stabilize) {
      try {
        out.conditions.push_back(check_integrability(density, *good_p));
      } catch (const BaseVanishesOffOrigin&) {
        // already reported by the plain integrability check
      }
    }
  }
}

// Applies the mode's certification policy to the collected evidence.
void conclude(CertificateResult& out, bool sos_ok, CertMode mode,
              const VerifyOptions& opts) {
  std::vector<std::string> mandatory;
  if (mode == CertMode::Stabilize) mandatory = {"integrability(D)",
                                                "density_shape(stabilize)"};
  if (mode == CertMode::Escape)
    mandatory = {"non_integrability(D)", "density_shape(escape)"};

  bool failed = false, marginal = false;
  for (const auto& c : out.conditions) {
    bool is_mandatory = std::find(mandatory.begin(), mandatory.end(), c.name) !=
                        mandatory.end();
    if (is_mandatory && c.verdict == Verdict::Fails) failed = true;
    if (c.verdict == Verdict::Marginal) marginal = true;
  }
  if (!sos_ok) {
    out.verdict = CertVerdict::NotCertified;
    return;
  }
  if (failed) {
    out.verdict = CertVerdict::NotCertified;
    if (out.detail.empty()) out.detail = "a mandatory side condition fails";
    return;
  }
  if (marginal && opts.strict_side_conditions) {
    out.verdict = CertVerdict::Marginal;
    out.detail = "side conditions are marginal under strict policy";
    return;
  }
  out.verdict = CertVerdict::Certified;
  if (out.detail.empty())
    out.detail =
        "sign certificate holds almost everywhere (nonzero sum of squares)";
}

FPolynomial with_positivity_margin(const FPolynomial& n, double eps_pos) {
  if (eps_pos <= 0.0 || n.is_zero()) return n;
  const std::size_t dim = n.dim();
  FPolynomial r2(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    Monomial m(dim);
    m[i] = 2;
    r2.add_term(m, 1.0);
  }
  return n - r2.pow(n.total_degree() / 2).scaled(eps_pos);
}

// Shared SOS tail: solve, extract, record status.
bool run_sos(CertificateResult& out, SosProblem prob,
             const VerifyOptions& opts) {
  auto sol = sdp_solve(prob.sdp, opts.sdp);
  out.sdp_status = sol.status;
  bool ok = false;
  if (sol.status == SdpStatus::Feasible) {
    SosCertificate cert = extract_certificate(prob, sol);
    ok = cert.valid(opts.eps_res, opts.eps_eig);
    if (!ok)
      out.detail = "solver converged but the certificate failed re-validation";
    out.certificate = std::move(cert);
  } else if (sol.status == SdpStatus::Infeasible) {
    out.detail = "no sum-of-squares certificate at this basis";
  } else {
    out.numerical_failure = true;
    out.detail = "semidefinite solve did not converge: " + sol.failure;
  }
  out.problem = std::move(prob);
  return ok;
}

}  // namespace

CertificateResult verify_density(const SdeSystem& sys,
                                 const DensityCandidate& density, CertMode mode,
                                 const VerifyOptions& opts) {
  if (density.b != sys.base())
    throw BaseMismatch("verify_density: density base must match the system");
  CertificateResult out;
  out.density = density;

  BExpr image = adjoint_generator(sys, density.to_bexpr());
  if (image.is_zero()) {
    out.detail = "adjoint image is identically zero, not negative a.e.";
    attach_density_conditions(out, sys, density, mode, opts);
    out.verdict = CertVerdict::NotCertified;
    return out;
  }
  auto [cleared, shift] = image.clear_base();
  (void)shift;
  out.cleared_target = to_float(-cleared);
  attach_density_conditions(out, sys, density, mode, opts);

  bool sos_ok = false;
  try {
    sos_ok = run_sos(out,
                     build_sos_feasibility(
                         with_positivity_margin(out.cleared_target, opts.eps_pos)),
                     opts);
  } catch (const OddDegree&) {
    out.detail = "cleared adjoint image has odd degree, cannot be a square";
  }
  conclude(out, sos_ok, mode, opts);
  return out;
}

CertificateResult verify_on_invariant_set(const SdeSystem& sys,
                                          const DensityCandidate& density,
                                          const std::vector<Polynomial>& K,
                                          const VerifyOptions& opts) {
  if (K.empty()) return verify_density(sys, density, CertMode::Stabilize, opts);
  if (density.b != sys.base())
    throw BaseMismatch("verify_on_invariant_set: density base mismatch");
  CertificateResult out;
  out.density = density;

  BExpr image = adjoint_generator(sys, density.to_bexpr());
  if (image.is_zero()) {
    out.detail = "adjoint image is identically zero, not negative a.e.";
    attach_density_conditions(out, sys, density, CertMode::InvariantSet, opts);
    out.verdict = CertVerdict::NotCertified;
    return out;
  }
  auto [cleared, shift] = image.clear_base();
  (void)shift;
  out.cleared_target = to_float(-cleared);
  attach_density_conditions(out, sys, density, CertMode::InvariantSet, opts);

  int target_deg = out.cleared_target.total_degree();
  std::vector<FPolynomial> gs;
  std::vector<int> degrees;
  for (const auto& g : K) {
    gs.push_back(to_float(g));
    int d = target_deg - g.total_degree();
    if (d < 0) d = 0;
    degrees.push_back(d - (d % 2));
  }
  bool sos_ok = false;
  try {
    sos_ok = run_sos(
        out,
        localized_sos(with_positivity_margin(out.cleared_target, opts.eps_pos),
                      gs, degrees),
        opts);
  } catch (const OddDegree&) {
    out.detail = "cleared adjoint image has odd degree, cannot be a square";
  } catch (const DegreeOverflow& e) {
    out.detail = e.what();
  }
  conclude(out, sos_ok, CertMode::InvariantSet, opts);
  return out;
}

CertificateResult verify_deterministic(const std::vector<Polynomial>& field,
                                       const DensityCandidate& density,
                                       const VerifyOptions& opts) {
  if (field.empty())
    throw std::invalid_argument("verify_deterministic: empty field");
  const std::size_t n = field.size();
  std::vector<Rational> origin(n, Rational(0));
  CertificateResult out;
  out.density = density;

  ConditionReport fixed;
  fixed.name = "field_vanishes_at_origin";
  bool at_zero = true;
  for (const auto& f : field) at_zero = at_zero && f.eval(origin).is_zero();
  fixed.verdict = at_zero ? Verdict::Holds : Verdict::Fails;
  fixed.details.push_back({"f(0) = 0", at_zero ? "yes" : "no", ""});
  out.conditions.push_back(std::move(fixed));

  BExpr div = divergence_condition(field, density.to_bexpr());
  if (div.is_zero()) {
    out.detail = "divergence of f D is identically zero, not positive a.e.";
    out.verdict = CertVerdict::NotCertified;
    return out;
  }
  auto [cleared, shift] = div.clear_base();
  (void)shift;
  // Deterministic sign convention: div(f D) must be positive a.e.
  out.cleared_target = to_float(cleared);

  std::vector<BExpr> drift;
  drift.reserve(n);
  for (const auto& f : field)
    drift.push_back(BExpr::from_polynomial(density.b, f));
  SdeSystem noiseless(std::move(drift), {}, at_zero);
  attach_density_conditions(out, noiseless, density, CertMode::Stabilize, opts);

  bool sos_ok = false;
  try {
    sos_ok = run_sos(out,
                     build_sos_feasibility(
                         with_positivity_margin(out.cleared_target, opts.eps_pos)),
                     opts);
  } catch (const OddDegree&) {
    out.detail = "cleared divergence has odd degree, cannot be a square";
  }
  if (!at_zero) {
    out.verdict = CertVerdict::NotCertified;
    out.detail = "field does not fix the origin";
    return out;
  }
  conclude(out, sos_ok, CertMode::Stabilize, opts);
  return out;
}

CertificateResult synthesize_controller(const ControlledSdeSystem& sys,
                                        const SynthesisSpec& spec,
                                        const VerifyOptions& opts) {
  const std::size_t n = sys.plant.dim();
  if (spec.b != sys.plant.base())
    throw BaseMismatch("synthesize_controller: b must be the system base");
  if (spec.lambda <= 0)
    throw std::invalid_argument("synthesize_controller: lambda must be > 0");
  if (spec.deg_a != 0 && (spec.deg_a < 2 || spec.deg_a % 2 != 0))
    throw std::invalid_argument(
        "synthesize_controller: deg_a must be 0 or an even integer >= 2");
  for (const auto& e : sys.control_channel)
    if (!e.is_polynomial())
      throw NotPolynomial("synthesize_controller: control channel");

  CertificateResult out;
  const Rational clear_power = spec.gamma + Rational(2);

  // Cleared adjoint image of mu * b^-gamma, exact in rationals.
  auto cleared_density_part = [&](const Polynomial& mu) {
    BExpr d(spec.b, mu, -spec.gamma);
    BExpr img = adjoint_generator(sys.plant, d);
    return (-img.shifted(clear_power)).to_polynomial();
  };
  // Cleared control part of nu * b^-gamma through the channel divergence.
  auto cleared_control_part = [&](const Polynomial& nu) {
    BExpr ud(spec.b, nu, -spec.gamma);
    BExpr acc(spec.b);
    for (std::size_t i = 0; i < n; ++i)
      acc = acc + (sys.control_channel[i] * ud).derivative(i);
    return acc.shifted(clear_power).to_polynomial();
  };

  auto monomials_up_to = [&](int lo, int hi) {
    std::vector<Monomial> out_m;
    std::vector<int> e(n, 0);
    while (true) {
      int deg = 0;
      for (int v : e) deg += v;
      if (deg >= lo && deg <= hi) out_m.emplace_back(e);
      std::size_t i = 0;
      while (i < n) {
        if (++e[i] <= hi) break;
        e[i] = 0;
        ++i;
      }
      if (i == n) break;
    }
    std::sort(out_m.begin(), out_m.end(), GrlexLess{});
    std::erase_if(out_m, [&](const Monomial& m) { return m.degree() > hi; });
    return out_m;
  };

  // Parameters: coefficients of c on monomials of degree 1..deg_c (c(0)=0).
  std::vector<Monomial> c_monos = monomials_up_to(1, spec.deg_c);
  FPolynomial n0 = to_float(cleared_density_part(
      Polynomial::constant(n, Rational::from_double(spec.lambda))));
  std::vector<FPolynomial> nj;
  for (const auto& m : c_monos) {
    Polynomial nu(n);
    nu.set(m, Rational(1));
    nj.push_back(to_float(cleared_control_part(nu)));
  }
  // a = lambda + sigma with sigma a square form over monomials of degree
  // 1..deg_a/2; its coefficients ride along as extra parameters tied to an
  // extra Gram block.
  std::vector<Monomial> a_monos;
  std::vector<Monomial> a_basis;
  if (spec.deg_a >= 2) {
    a_monos = monomials_up_to(1, spec.deg_a);
    a_basis = monomials_up_to(1, spec.deg_a / 2);
    for (const auto& m : a_monos) {
      Polynomial mu(n);
      mu.set(m, Rational(1));
      nj.push_back(to_float(cleared_density_part(mu)));
    }
  }

  int target_deg = n0.total_degree();
  for (const auto& p : nj) target_deg = std::max(target_deg, p.total_degree());
  if (target_deg % 2 != 0)
    throw OddDegree("synthesize_controller: cleared target degree " +
                    std::to_string(target_deg) +
                    " is odd; adjust deg_c / deg_a / gamma");

  SosProblem prob = build_parametric_sos(n0, nj, {});
  if (spec.deg_a >= 2) {
    // Append the Gram block realizing sigma and tie each a-coefficient to
    // its expansion: theta_mu - <incidence_mu, G_a> = 0.
    int a_block = static_cast<int>(prob.sdp.block_sizes.size());
    prob.sdp.block_sizes.push_back(static_cast<int>(a_basis.size()));
    prob.mult_bases.push_back(a_basis);
    prob.mult_gs.push_back(FPolynomial(n));  // marker: not a multiplier
    GramIncidence inc = gram_incidence(a_basis);
    const int c_count = static_cast<int>(c_monos.size());
    for (std::size_t mi = 0; mi < a_monos.size(); ++mi) {
      int row = static_cast<int>(prob.sdp.constraints.size());
      prob.sdp.constraints.emplace_back();
      prob.sdp.constraints[row].rhs = 0.0;
      prob.sdp.constraints[row].free_coeffs.emplace_back(
          c_count + static_cast<int>(mi), 1.0);
      auto it = inc.find(a_monos[mi]);
      if (it != inc.end())
        for (auto [i, j] : it->second)
          prob.sdp.add_entry(row, a_block, i, j, i == j ? -1.0 : -2.0);
    }
    for (int i = 0; i < static_cast<int>(a_basis.size()); ++i)
      prob.sdp.obj_mat.push_back({a_block, i, i, 1.0});
  }

  auto sol = sdp_solve(prob.sdp, opts.sdp);
  out.sdp_status = sol.status;
  bool sos_ok = false;
  if (sol.status == SdpStatus::Feasible) {
    SosCertificate cert = extract_certificate(prob, sol);
    sos_ok = cert.valid(opts.eps_res, opts.eps_eig);
    if (!sos_ok)
      out.detail = "solver converged but the certificate failed re-validation";
    // Assemble c and a from the parameter vector.
    FPolynomial c(n), a(n);
    for (std::size_t i = 0; i < c_monos.size(); ++i)
      c.add_term(c_monos[i], cert.params[i]);
    a.add_term(Monomial(n), spec.lambda);
    for (std::size_t i = 0; i < a_monos.size(); ++i)
      a.add_term(a_monos[i], cert.params[c_monos.size() + i]);
    out.control_numerator = c;
    out.control_denominator = a;
    out.has_control = true;
    out.cleared_target = prob.n0;
    for (std::size_t j = 0; j < prob.nj.size(); ++j) {
      FPolynomial part(n);
      for (const auto& [m, v] : prob.nj[j].terms())
        part.add_term(m, v * cert.params[j]);
      out.cleared_target = out.cleared_target + part;
    }
    out.density = DensityCandidate{to_exact(a), spec.b, spec.gamma};
    out.certificate = std::move(cert);
  } else if (sol.status == SdpStatus::Infeasible) {
    out.detail = "infeasible at deg_c = " + std::to_string(spec.deg_c) +
                 ", deg_a = " + std::to_string(spec.deg_a) + ", gamma = " +
                 spec.gamma.to_string();
  } else {
    out.numerical_failure = true;
    out.detail = "semidefinite solve did not converge: " + sol.failure;
  }
  out.problem = std::move(prob);

  if (out.density && spec.deg_a >= 2 && sos_ok) {
    ConditionReport apos;
    apos.name = "controller_denominator_positive";
    apos.verdict = Verdict::Holds;
    apos.details.push_back(
        {"a = lambda + sum of squares", "a(x) >= lambda > 0 for all x",
         "u = c/a smooth everywhere"});
    out.conditions.push_back(std::move(apos));
  }
  if (out.density) {
    // Closed loop is polynomial when a is constant; then the growth and
    // integrability route applies directly.
    if (spec.deg_a == 0 && sos_ok) {
      std::vector<BExpr> drift;
      FPolynomial u_over_lambda(n);
      for (const auto& [m, v] : out.control_numerator.terms())
        u_over_lambda.add_term(m, v / spec.lambda);
      Polynomial u = to_exact(u_over_lambda);
      for (std::size_t i = 0; i < n; ++i) {
        BExpr closed = sys.plant.drift()[i] +
                       sys.control_channel[i] *
                           BExpr::from_polynomial(spec.b, u);
        drift.push_back(closed);
      }
      bool closed_poly = true;
      for (const auto& e : drift) closed_poly = closed_poly && e.is_polynomial();
      if (closed_poly) {
        SdeSystem closed(std::move(drift), sys.plant.noise(), false);
        attach_density_conditions(out, closed, *out.density, spec.mode, opts);
      }
    } else if (sos_ok) {
      attach_density_conditions(out, sys.plant, *out.density, spec.mode, opts);
    }
  }
  conclude(out, sos_ok, spec.mode, opts);
  return out;
}

}  // namespace agstab
