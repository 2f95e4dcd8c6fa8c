#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "agstab/poly.hpp"

namespace agstab {

struct BaseMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NonIntegerGap : std::runtime_error {
  std::vector<Rational> powers;
  explicit NonIntegerGap(std::vector<Rational> offending);
};
struct BaseVanishes : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Finite sum of coeff(x) * b(x)^q terms with rational exponents q over one
/// shared, non-constant base polynomial b.  Closed under +, *, and partial
/// differentiation, which is what makes expressions like (x^2+z^2)^-2
/// usable as densities.
///
/// Normal form: powers strictly increasing, no zero coefficients, and every
/// coefficient polynomial reduced modulo b (quotients carried into the next
/// higher power).  A single polynomial is a Groebner basis of the ideal it
/// generates, so the reduced form is canonical and equality is structural.
class BExpr {
 public:
  struct Term {
    Rational power;
    Polynomial coeff;
  };

  /// Zero expression over the given base.
  explicit BExpr(Polynomial base);
  /// coeff * base^power.
  BExpr(Polynomial base, Polynomial coeff, Rational power);
  /// Plain polynomial viewed over the given base.
  static BExpr from_polynomial(Polynomial base, const Polynomial& p);

  const Polynomial& base() const { return base_; }
  std::size_t dim() const { return base_.dim(); }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  BExpr operator-() const;
  BExpr operator+(const BExpr& o) const;
  BExpr operator-(const BExpr& o) const;
  BExpr operator*(const BExpr& o) const;
  BExpr scaled(const Rational& s) const;
  /// Multiplies by base^q.
  BExpr shifted(const Rational& q) const;

  bool operator==(const BExpr& o) const;
  bool operator!=(const BExpr& o) const { return !(*this == o); }

  BExpr derivative(std::size_t axis) const;

  /// True when every power is a nonnegative integer (value is a polynomial).
  bool is_polynomial() const;
  Polynomial to_polynomial() const;

  /// Factors the expression as P(x) * b(x)^shift where shift is the minimum
  /// power.  Requires all power gaps to be nonnegative integers.
  std::pair<Polynomial, Rational> clear_base() const;

  /// Exact evaluation of the polynomial parts, rounded once; base powers are
  /// applied in binary64.  Throws BaseVanishes when b(point) == 0 and a
  /// negative or fractional power is present.
  double evaluate(std::span<const double> point) const;
  /// Exact evaluation at a rational point; requires all powers to be
  /// integers or b to evaluate to an exact rational square, else nullopt.
  std::optional<Rational> evaluate_exact(const std::vector<Rational>& point) const;

  std::string to_string(std::span<const std::string> names) const;

 private:
  Polynomial base_;
  std::vector<Term> terms_;  // strictly increasing powers

  void add_in(const Rational& power, const Polynomial& coeff);
  void normalize();
  void check_compatible(const BExpr& o) const;
};

/// Fast floating evaluator for one BExpr; built once, evaluated many times.
class CompiledBExpr {
 public:
  CompiledBExpr() = default;
  explicit CompiledBExpr(const BExpr& e);

  double eval(std::span<const double> x) const;
  std::size_t dim() const { return n_; }

 private:
  std::size_t n_ = 0;
  CompiledPoly base_;
  struct Term {
    CompiledPoly coeff;
    double power = 0;
    bool integral = false;
    long ipow = 0;
  };
  std::vector<Term> terms_;
  bool base_needed_ = false;
};

}  // namespace agstab
