#pragma once

#include <optional>
#include <string>
#include <vector>

#include "agstab/ops.hpp"
#include "agstab/sos.hpp"

namespace agstab {

/// Plant with one scalar control channel: drift becomes X0 + u(x) Ytilde.
struct ControlledSdeSystem {
  SdeSystem plant;
  std::vector<BExpr> control_channel;

  ControlledSdeSystem(SdeSystem sys, std::vector<BExpr> channel);
};

enum class CertMode { Stabilize, Escape, InvariantSet };
std::string to_string(CertMode m);

/// Search space for density/controller synthesis: D = a / b^gamma with
/// a = lambda + (sum of squares vanishing at 0), u = c / a with c(0) = 0.
struct SynthesisSpec {
  Polynomial b;
  Rational gamma;
  int deg_a = 0;  // 0 means a = lambda exactly; otherwise even, >= 2
  int deg_c = 1;
  double lambda = 1.0;
  CertMode mode = CertMode::Stabilize;
  std::vector<Polynomial> constraints;  // invariant-set mode only
};

enum class CertVerdict { Certified, NotCertified, Marginal };
std::string to_string(CertVerdict v);

struct VerifyOptions {
  bool strict_side_conditions = false;  // marginal side conditions block
  double eps_pos = 0.0;  // certify N - eps_pos |x|^deg instead of N
  double eps_res = 1e-7;
  double eps_eig = 1e-8;
  int growth_p_max = 4;
  SdpOptions sdp;
};

struct CertificateResult {
  CertVerdict verdict = CertVerdict::NotCertified;
  bool numerical_failure = false;
  std::string detail;
  SdpStatus sdp_status = SdpStatus::NumericalFailure;
  std::optional<SosCertificate> certificate;
  std::optional<SosProblem> problem;  // assembled SOS problem (SDPA export)
  std::vector<ConditionReport> conditions;
  FPolynomial cleared_target;  // the polynomial handed to the SOS layer

  std::optional<DensityCandidate> density;
  bool has_control = false;
  FPolynomial control_numerator;    // c
  FPolynomial control_denominator;  // a

  std::string density_text(std::span<const std::string> names) const;
  /// sig_figs > 0 rounds the displayed coefficients (full precision is
  /// always kept in the stored polynomials and the JSON report).
  std::string control_text(std::span<const std::string> names,
                           int sig_figs = 0) const;
};

/// Checks the candidate density against the mode's sign condition by
/// clearing the base from the adjoint image and certifying the result SOS,
/// then attaches the side-condition reports the mode demands.
CertificateResult verify_density(const SdeSystem& sys,
                                 const DensityCandidate& density, CertMode mode,
                                 const VerifyOptions& opts = {});

/// Localized variant on a semialgebraic set K = {g_i >= 0}; backward
/// invariance of K is taken on the caller's word and surfaced in the report.
CertificateResult verify_on_invariant_set(const SdeSystem& sys,
                                          const DensityCandidate& density,
                                          const std::vector<Polynomial>& K,
                                          const VerifyOptions& opts = {});

/// Deterministic field check: div(f D) > 0 almost everywhere.
CertificateResult verify_deterministic(const std::vector<Polynomial>& field,
                                       const DensityCandidate& density,
                                       const VerifyOptions& opts = {});

/// Searches coefficients of a and c making -b^(gamma+2) L*D a sum of
/// squares, where D = a/b^gamma and the closed-loop drift is X0 + (c/a) Y.
CertificateResult synthesize_controller(const ControlledSdeSystem& sys,
                                        const SynthesisSpec& spec,
                                        const VerifyOptions& opts = {});

}  // namespace agstab
