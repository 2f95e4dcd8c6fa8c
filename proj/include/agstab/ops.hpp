#pragma once

#include <optional>
#include <string>
#include <vector>

#include "agstab/bexpr.hpp"

namespace agstab {

struct NotExpressible : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotPolynomial : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BaseVanishesOffOrigin : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ito diffusion dx = X0 dt + sum_k Xk dW^k with every component expressed
/// over one shared base polynomial.
class SdeSystem {
 public:
  SdeSystem(std::vector<BExpr> drift, std::vector<std::vector<BExpr>> noise,
            bool equilibrium_at_origin = false);

  std::size_t dim() const { return drift_.size(); }
  std::size_t num_noise() const { return noise_.size(); }
  const Polynomial& base() const { return drift_.front().base(); }
  const std::vector<BExpr>& drift() const { return drift_; }
  const std::vector<std::vector<BExpr>>& noise() const { return noise_; }
  bool equilibrium_at_origin() const { return equilibrium_; }

 private:
  std::vector<BExpr> drift_;
  std::vector<std::vector<BExpr>> noise_;
  bool equilibrium_;
};

/// Density candidate D = a * b^(-gamma).
struct DensityCandidate {
  Polynomial a;
  Polynomial b;
  Rational gamma;

  BExpr to_bexpr() const { return BExpr(b, a, -gamma); }
};

enum class Verdict { Holds, Fails, Marginal, Inconclusive };
std::string to_string(Verdict v);

struct ConditionReport {
  std::string name;
  Verdict verdict = Verdict::Inconclusive;
  struct Line {
    std::string condition;
    std::string value;
    std::string outcome;
  };
  std::vector<Line> details;
};

/// Fokker-Planck adjoint: L*f = 1/2 sum_k sum_ij d2/dxi dxj (Xk_i Xk_j f)
/// - sum_i d/dxi (X0_i f).  Exact, linear in f.
BExpr adjoint_generator(const SdeSystem& sys, const BExpr& density);

/// Divergence form div(f D) for a deterministic field f; equals -L*D of the
/// noiseless system with drift f.
BExpr divergence_condition(const std::vector<Polynomial>& field,
                           const BExpr& density);

/// State-dependent time rescaling by rate c: drift -> c X0, noise ->
/// sqrt(c) Xk, and densities transform by 1/c.  c must be r * b^q with r a
/// positive rational square so sqrt(c) stays inside the algebra.
struct TimeChange {
  SdeSystem system;
  BExpr density_scale;  // multiply D by this to get the transformed density
};
TimeChange time_change(const SdeSystem& sys, const BExpr& rate);

/// Polynomial growth checks backing the non-Lipschitz route: diffusion
/// degree <= p+1 and drift degree <= 2p+1 (derivative bounds follow for
/// polynomials and are reported as derived lines).
ConditionReport check_growth(const SdeSystem& sys, int p);

/// Global Lipschitz holds for polynomial fields iff degree <= 1; higher
/// degree is reported as needing the time-change route, not as failure.
ConditionReport check_lipschitz(const SdeSystem& sys);

/// Sufficient radial-degree test for integrability of D (optionally of
/// (1+|x|^p)^2 D) outside the unit ball.  Decides by the leading radial
/// exponent d = deg a - gamma deg b (+2p): Holds when d + n < 0, Marginal
/// at equality, Fails when the leading direction minimum is positive and
/// d + n > 0, Inconclusive otherwise.
ConditionReport check_integrability(const DensityCandidate& density,
                                    std::optional<int> p);

struct SpherePositivity {
  enum class Kind { Positive, FoundZero, Unknown } kind = Kind::Unknown;
  std::vector<double> witness;  // populated for FoundZero
  double min_sampled = 0;
  bool certified = false;  // true when an SOS certificate backed Positive
};

/// Samples q on the unit sphere over a deterministic quasirandom point set
/// (default 10^4 * n points) and, when the sampled minimum is positive and q
/// is homogeneous of even degree, asks for an SOS certificate of
/// q - eps |x|^deg >= 0.  Positive only with certificate.
SpherePositivity positivity_on_sphere(const Polynomial& q,
                                      std::size_t samples = 0,
                                      bool request_certificate = true);

}  // namespace agstab
