#pragma once

#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "agstab/poly.hpp"
#include "agstab/sdp.hpp"

namespace agstab {

struct OddDegree : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct InconsistentStructural : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegreeOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Candidate square basis for a set of target polynomials: all monomials
/// whose total degree lies in [floor(mindeg/2), ceil(maxdeg/2)] and whose
/// exponents respect the componentwise half box bound of the targets.
/// `extra_degree` relaxes every bound, enlarging the basis.
std::vector<Monomial> sos_basis(std::span<const FPolynomial> targets,
                                int extra_degree = 0);

/// Products m_i * m_j (i <= j) grouped by the resulting monomial.
using GramIncidence =
    std::map<Monomial, std::vector<std::pair<int, int>>, GrlexLess>;
GramIncidence gram_incidence(const std::vector<Monomial>& basis);

/// Linear condition on the parameter vector: sum coeff_j * theta_j = rhs.
struct StructuralConstraint {
  std::vector<std::pair<int, double>> terms;
  double rhs = 0;
};

/// An SOS feasibility/search problem lowered to a semidefinite program.
/// Block 0 of the SDP is the main Gram matrix; localized problems add one
/// Gram block per multiplier.  Constraint rows are scaled so the targets
/// have unit maximum coefficient; theta stays in true units.
struct SosProblem {
  SdpProblem sdp;
  std::vector<Monomial> basis;
  std::vector<std::vector<Monomial>> mult_bases;  // one per constraint g_i
  std::vector<FPolynomial> mult_gs;
  FPolynomial n0;
  std::vector<FPolynomial> nj;
  double scale = 1.0;

  std::string describe(std::span<const std::string> names) const;
};

/// N is a sum of squares?  Requires even degree.
SosProblem build_sos_feasibility(const FPolynomial& n, int extra_degree = 0);
SosProblem build_sos_feasibility(const Polynomial& n, int extra_degree = 0);

/// Find theta with N0 + sum_j theta_j N_j a sum of squares, subject to
/// linear structural constraints on theta.
SosProblem build_parametric_sos(FPolynomial n0, std::vector<FPolynomial> nj,
                                const std::vector<StructuralConstraint>& structural);

/// Putinar form: N = sigma_0 + sum_i sigma_i g_i with every sigma SOS,
/// certifying N >= 0 on the set {g_i >= 0}.  Multiplier degrees are the
/// total degrees allotted to each sigma_i.
SosProblem localized_sos(const FPolynomial& n, std::vector<FPolynomial> gs,
                         const std::vector<int>& mult_degrees,
                         int degree_cap = 40);

/// Gram-matrix proof of nonnegativity.  residual and min_eig are measured
/// after rescaling the achieved target to unit maximum coefficient; gram is
/// stored in true units (z^T gram z tracks the unscaled target).
struct SosCertificate {
  std::vector<Monomial> basis;
  Mat gram;
  std::vector<Mat> mult_grams;
  std::vector<double> params;
  double residual = 1e300;
  double min_eig = -1e300;

  bool valid(double eps_res = 1e-7, double eps_eig = 1e-8) const {
    return residual <= eps_res && min_eig >= -eps_eig;
  }
  /// Explicit sum-of-squares terms (weight, polynomial) with
  /// target ~= sum weight * polynomial^2, from the eigendecomposition.
  std::vector<std::pair<double, FPolynomial>> squares(double clip = 1e-12) const;
};

/// Residual recomputed from scratch (sorted binary64 summation); validity is
/// decided by tolerances on the recomputation, never by solver status.
SosCertificate extract_certificate(const SosProblem& prob,
                                   const SdpSolution& sol);

}  // namespace agstab
