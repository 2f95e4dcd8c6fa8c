#include "agstab/ops.hpp"

#include <algorithm>
#include <cmath>

#include "agstab/sos.hpp"

namespace agstab {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    case Verdict::Marginal: return "marginal";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

SdeSystem::SdeSystem(std::vector<BExpr> drift,
                     std::vector<std::vector<BExpr>> noise,
                     bool equilibrium_at_origin)
    : drift_(std::move(drift)),
      noise_(std::move(noise)),
      equilibrium_(equilibrium_at_origin) {
  if (drift_.empty()) throw std::invalid_argument("SdeSystem: empty drift");
  const std::size_t n = drift_.size();
  const Polynomial& b = drift_.front().base();
  auto check = [&](const BExpr& e) {
    if (e.dim() != n) throw DimensionMismatch("SdeSystem: entry dimension");
    if (e.base() != b) throw BaseMismatch("SdeSystem: entries share one base");
  };
  for (const auto& e : drift_) check(e);
  for (const auto& col : noise_) {
    if (col.size() != n)
      throw DimensionMismatch("SdeSystem: noise column length");
    for (const auto& e : col) check(e);
  }
  if (equilibrium_) {
    std::vector<Rational> origin(n, Rational(0));
    auto is_zero_at_origin = [&](const BExpr& e) {
      auto v = e.evaluate_exact(origin);
      return v.has_value() && v->is_zero();
    };
    for (const auto& e : drift_)
      if (!is_zero_at_origin(e))
        throw std::invalid_argument(
            "SdeSystem: drift does not vanish at the origin");
    for (const auto& col : noise_)
      for (const auto& e : col)
        if (!is_zero_at_origin(e))
          throw std::invalid_argument(
              "SdeSystem: noise does not vanish at the origin");
  }
}

BExpr adjoint_generator(const SdeSystem& sys, const BExpr& density) {
  if (density.base() != sys.base())
    throw BaseMismatch("adjoint_generator: density base mismatch");
  const std::size_t n = sys.dim();
  BExpr acc(sys.base());
  for (const auto& col : sys.noise())
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        acc = acc + (col[i] * col[j] * density).derivative(i).derivative(j);
  acc = acc.scaled(Rational(1, 2));
  for (std::size_t i = 0; i < n; ++i)
    acc = acc - (sys.drift()[i] * density).derivative(i);
  return acc;
}

BExpr divergence_condition(const std::vector<Polynomial>& field,
                           const BExpr& density) {
  if (field.size() != density.dim())
    throw DimensionMismatch("divergence_condition: field dimension");
  BExpr acc(density.base());
  for (std::size_t i = 0; i < field.size(); ++i) {
    BExpr fi = BExpr::from_polynomial(density.base(), field[i]);
    acc = acc + (fi * density).derivative(i);
  }
  return acc;
}

TimeChange time_change(const SdeSystem& sys, const BExpr& rate) {
  if (rate.base() != sys.base())
    throw BaseMismatch("time_change: rate base mismatch");
  if (rate.terms().size() != 1)
    throw NotExpressible("time_change: rate must be a single r * b^q term");
  const auto& term = rate.terms().front();
  if (term.coeff.total_degree() > 0)
    throw NotExpressible(
        "time_change: rate coefficient must be a positive constant");
  Rational r = term.coeff.coeff(Monomial(rate.dim()));
  if (r.signum() <= 0)
    throw NotExpressible("time_change: rate must be strictly positive");
  Rational root;
  if (!r.sqrt_exact(root))
    throw NotExpressible(
        "time_change: sqrt of rate coefficient leaves the rationals");
  const Rational q = term.power;
  const Rational half_q = q * Rational(1, 2);

  std::vector<BExpr> drift;
  drift.reserve(sys.dim());
  for (const auto& e : sys.drift()) drift.push_back((e * rate));
  std::vector<std::vector<BExpr>> noise;
  for (const auto& col : sys.noise()) {
    std::vector<BExpr> scaled;
    scaled.reserve(col.size());
    for (const auto& e : col)
      scaled.push_back(e.scaled(root).shifted(half_q));
    noise.push_back(std::move(scaled));
  }
  BExpr inv_rate(sys.base(),
                 Polynomial::constant(sys.dim(), Rational(1) / r), -q);
  // The rate can be singular at the origin (base vanishing there with q < 0),
  // in which case the transformed fields lose the verifiable equilibrium.
  bool equilibrium = sys.equilibrium_at_origin();
  if (equilibrium) {
    std::vector<Rational> origin(sys.dim(), Rational(0));
    equilibrium = rate.evaluate_exact(origin).has_value();
  }
  return {SdeSystem(std::move(drift), std::move(noise), equilibrium),
          std::move(inv_rate)};
}

namespace {

int bexpr_degree(const BExpr& e) {
  // Total degree of a polynomial-valued expression.
  int d = -1;
  for (const auto& t : e.terms()) {
    std::int64_t k = 0;
    t.power.to_int64(k);
    d = std::max(d, t.coeff.total_degree() +
                        static_cast<int>(k) * e.base().total_degree());
  }
  return d;
}

Polynomial leading_form(const Polynomial& p) {
  Polynomial out(p.dim());
  int d = p.total_degree();
  for (const auto& [m, c] : p.terms())
    if (m.degree() == d) out.set(m, c);
  return out;
}

// Deterministic quasirandom unit-sphere points: Halton sequences mapped
// through Box-Muller, then normalized.
std::vector<std::vector<double>> sphere_points(std::size_t n, std::size_t count) {
  static const int primes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                               23, 29, 31, 37, 41, 43, 47, 53};
  auto halton = [](std::size_t index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
      f /= base;
      r += f * (index % base);
      index /= base;
    }
    return r;
  };
  std::vector<std::vector<double>> pts;
  pts.reserve(count);
  const std::size_t pairs = (n + 1) / 2;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> x(n);
    for (std::size_t p = 0; p < pairs; ++p) {
      double u1 = halton(i + 1, primes[(2 * p) % 16]);
      double u2 = halton(i + 1, primes[(2 * p + 1) % 16]);
      u1 = std::max(u1, 1e-12);
      double rad = std::sqrt(-2.0 * std::log(u1));
      double g0 = rad * std::cos(2 * M_PI * u2);
      double g1 = rad * std::sin(2 * M_PI * u2);
      x[2 * p] = g0;
      if (2 * p + 1 < n) x[2 * p + 1] = g1;
    }
    double norm = 0;
    for (double v : x) norm += v * v;
    norm = std::sqrt(norm);
    if (norm < 1e-9) {
      x.assign(n, 0.0);
      x[0] = 1.0;
      norm = 1.0;
    }
    for (double& v : x) v /= norm;
    pts.push_back(std::move(x));
  }
  return pts;
}

}  // namespace

ConditionReport check_growth(const SdeSystem& sys, int p) {
  if (p < 1) throw std::invalid_argument("check_growth: p >= 1 required");
  ConditionReport rep;
  rep.name = "polynomial_growth(p=" + std::to_string(p) + ")";
  auto require_poly = [&](const BExpr& e, const std::string& who) {
    if (!e.is_polynomial())
      throw NotPolynomial("check_growth: " + who + " is not polynomial");
  };
  bool ok = true;
  const int drift_bound = 2 * p + 1;
  const int noise_bound = p + 1;
  int drift_deg = -1;
  for (std::size_t i = 0; i < sys.dim(); ++i) {
    require_poly(sys.drift()[i], "drift component " + std::to_string(i));
    drift_deg = std::max(drift_deg, bexpr_degree(sys.drift()[i]));
  }
  rep.details.push_back({"deg X0 <= 2p+1",
                         std::to_string(drift_deg) + " vs " +
                             std::to_string(drift_bound),
                         drift_deg <= drift_bound ? "ok" : "violated"});
  rep.details.push_back({"deg dX0/dx <= 2p (derived)",
                         std::to_string(std::max(-1, drift_deg - 1)) + " vs " +
                             std::to_string(2 * p),
                         drift_deg - 1 <= 2 * p ? "ok" : "violated"});
  ok = ok && drift_deg <= drift_bound;
  for (std::size_t k = 0; k < sys.num_noise(); ++k) {
    int deg = -1;
    for (std::size_t i = 0; i < sys.dim(); ++i) {
      require_poly(sys.noise()[k][i],
                   "noise " + std::to_string(k + 1) + " component " +
                       std::to_string(i));
      deg = std::max(deg, bexpr_degree(sys.noise()[k][i]));
    }
    rep.details.push_back({"deg X" + std::to_string(k + 1) + " <= p+1",
                           std::to_string(deg) + " vs " +
                               std::to_string(noise_bound),
                           deg <= noise_bound ? "ok" : "violated"});
    ok = ok && deg <= noise_bound;
  }
  rep.verdict = ok ? Verdict::Holds : Verdict::Fails;
  return rep;
}

ConditionReport check_lipschitz(const SdeSystem& sys) {
  ConditionReport rep;
  rep.name = "global_lipschitz";
  int maxdeg = -1;
  bool poly = true;
  for (const auto& e : sys.drift()) {
    poly = poly && e.is_polynomial();
    if (poly) maxdeg = std::max(maxdeg, bexpr_degree(e));
  }
  for (const auto& col : sys.noise())
    for (const auto& e : col) {
      poly = poly && e.is_polynomial();
      if (poly) maxdeg = std::max(maxdeg, bexpr_degree(e));
    }
  if (!poly) {
    rep.verdict = Verdict::Inconclusive;
    rep.details.push_back({"field class", "rational (base powers present)",
                           "bounded-derivative check not attempted"});
    return rep;
  }
  rep.details.push_back({"max field degree", std::to_string(maxdeg), ""});
  if (maxdeg <= 1) {
    rep.verdict = Verdict::Holds;
    rep.details.back().outcome = "degree <= 1: globally Lipschitz";
  } else {
    rep.verdict = Verdict::Inconclusive;
    rep.details.back().outcome =
        "degree > 1: not globally Lipschitz; use the time-change route";
  }
  return rep;
}

ConditionReport check_integrability(const DensityCandidate& density,
                                    std::optional<int> p) {
  ConditionReport rep;
  rep.name = p ? "integrability((1+|x|^p)^2 D, p=" + std::to_string(*p) + ")"
               : "integrability(D)";
  const std::size_t n = density.b.dim();

  auto sphere = positivity_on_sphere(density.b);
  if (sphere.kind == SpherePositivity::Kind::FoundZero)
    throw BaseVanishesOffOrigin(
        "check_integrability: base polynomial vanishes away from the origin");

  if (density.a.is_zero()) {
    rep.verdict = Verdict::Holds;
    rep.details.push_back({"density", "identically zero", "trivially integrable"});
    return rep;
  }

  Rational d = Rational(density.a.total_degree()) -
               density.gamma * Rational(density.b.total_degree());
  if (p) d += Rational(2 * *p);
  Rational crit = d + Rational(static_cast<std::int64_t>(n));
  rep.details.push_back({"radial exponent d", d.to_string(), ""});
  rep.details.push_back({"d + n", crit.to_string(), ""});

  if (crit.signum() < 0) {
    rep.verdict = Verdict::Holds;
    rep.details.back().outcome = "d + n < 0: radial integral converges";
    return rep;
  }
  if (crit.is_zero()) {
    rep.verdict = Verdict::Marginal;
    rep.details.back().outcome =
        "d + n = 0: leading term is log-divergent";
    return rep;
  }
  // Divergence is genuine only when the leading angular parts stay positive.
  auto a_top = leading_form(density.a);
  auto b_top = leading_form(density.b);
  double amin = 1e300, bmin = 1e300;
  CompiledPoly ca(a_top), cb(b_top);
  for (const auto& x : sphere_points(n, 2000 * n)) {
    amin = std::min(amin, ca.eval(x));
    bmin = std::min(bmin, cb.eval(x));
  }
  rep.details.push_back({"min of leading form of a on sphere",
                         std::to_string(amin), ""});
  rep.details.push_back({"min of leading form of b on sphere",
                         std::to_string(bmin), ""});
  if (amin > 1e-9 && bmin > 1e-9) {
    rep.verdict = Verdict::Fails;
    rep.details[1].outcome = "d + n > 0 with positive leading minimum";
  } else {
    rep.verdict = Verdict::Inconclusive;
    rep.details[1].outcome =
        "d + n > 0 but the leading form degenerates in some direction";
  }
  return rep;
}

SpherePositivity positivity_on_sphere(const Polynomial& q, std::size_t samples,
                                      bool request_certificate) {
  SpherePositivity out;
  const std::size_t n = q.dim();
  if (samples == 0) samples = 10000 * n;
  if (q.is_zero()) {
    out.kind = SpherePositivity::Kind::FoundZero;
    out.witness.assign(n, 0.0);
    out.witness[0] = 1.0;
    return out;
  }
  CompiledPoly cq(to_float(q));
  double minv = 1e300;
  double nearest = 1e300;
  std::vector<double> near_zero;
  double maxabs = 0;
  for (const auto& x : sphere_points(n, samples)) {
    double v = cq.eval(x);
    maxabs = std::max(maxabs, std::abs(v));
    minv = std::min(minv, v);
    if (std::abs(v) < nearest) {
      nearest = std::abs(v);
      near_zero = x;
    }
  }
  out.min_sampled = minv;
  if (minv <= 1e-12 * (1 + maxabs)) {
    // A sign change pins a zero nearby; witness the sample closest to it.
    out.kind = SpherePositivity::Kind::FoundZero;
    out.witness = near_zero;
    return out;
  }
  bool homogeneous = q.total_degree() == q.min_degree();
  if (!request_certificate || !homogeneous || q.total_degree() % 2 != 0) {
    out.kind = SpherePositivity::Kind::Unknown;
    return out;
  }
  // Ask for q - eps |x|^deg to be SOS with eps = half the sampled minimum.
  Polynomial r2(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = Polynomial::variable(n, i);
    r2 = r2 + xi * xi;
  }
  Rational eps = Rational::from_double(minv / 2);
  Polynomial target = q - r2.pow(q.total_degree() / 2).scaled(eps);
  try {
    SosProblem prob = build_sos_feasibility(target);
    auto sol = sdp_solve(prob.sdp);
    if (sol.status == SdpStatus::Feasible &&
        extract_certificate(prob, sol).valid(1e-6, 1e-7)) {
      out.kind = SpherePositivity::Kind::Positive;
      out.certified = true;
      return out;
    }
  } catch (const std::exception&) {
    // fall through to Unknown
  }
  out.kind = SpherePositivity::Kind::Unknown;
  return out;
}

}  // namespace agstab
