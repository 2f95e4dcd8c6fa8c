#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agstab/rational.hpp"

namespace agstab {

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Exponent vector of a power product; length equals the ambient dimension.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::size_t n) : e_(n, 0) {}
  explicit Monomial(std::vector<int> e) : e_(std::move(e)) {}

  std::size_t dim() const { return e_.size(); }
  int operator[](std::size_t i) const { return e_[i]; }
  int& operator[](std::size_t i) { return e_[i]; }
  int degree() const {
    int d = 0;
    for (int x : e_) d += x;
    return d;
  }

  Monomial operator*(const Monomial& o) const {
    Monomial r = *this;
    for (std::size_t i = 0; i < e_.size(); ++i) r.e_[i] += o.e_[i];
    return r;
  }
  bool divides(const Monomial& o) const {
    for (std::size_t i = 0; i < e_.size(); ++i)
      if (e_[i] > o.e_[i]) return false;
    return true;
  }
  Monomial quotient(const Monomial& o) const {  // *this / o, o must divide
    Monomial r = *this;
    for (std::size_t i = 0; i < e_.size(); ++i) r.e_[i] -= o.e_[i];
    return r;
  }

  bool operator==(const Monomial& o) const { return e_ == o.e_; }
  bool operator!=(const Monomial& o) const { return !(*this == o); }

  std::string to_string(std::span<const std::string> names) const;

 private:
  std::vector<int> e_;
};

/// Graded lexicographic order, fixed project-wide: degree first, then
/// lexicographic with the first variable most significant.
struct GrlexLess {
  bool operator()(const Monomial& a, const Monomial& b) const {
    int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    for (std::size_t i = 0; i < a.dim(); ++i)
      if (a[i] != b[i]) return a[i] < b[i];
    return false;
  }
};

namespace detail {
inline bool coeff_is_zero(const Rational& c) { return c.is_zero(); }
inline bool coeff_is_zero(double c) { return c == 0.0; }
}  // namespace detail

/// Sparse multivariate polynomial over a fixed coefficient domain.
/// The exact (Rational) and floating (double) domains never mix; conversion
/// is the explicit one-way to_float / to_exact pair below.
template <typename C>
class PolynomialT {
 public:
  using Terms = std::map<Monomial, C, GrlexLess>;

  PolynomialT() : n_(0) {}
  explicit PolynomialT(std::size_t n) : n_(n) {}

  static PolynomialT constant(std::size_t n, const C& c) {
    PolynomialT p(n);
    p.set(Monomial(n), c);
    return p;
  }
  static PolynomialT variable(std::size_t n, std::size_t i, const C& c = C(1)) {
    PolynomialT p(n);
    Monomial m(n);
    m[i] = 1;
    p.set(m, c);
    return p;
  }

  std::size_t dim() const { return n_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t num_terms() const { return terms_.size(); }
  const Terms& terms() const { return terms_; }

  C coeff(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? C(0) : it->second;
  }

  void set(const Monomial& m, const C& c) {
    if (m.dim() != n_) throw DimensionMismatch("polynomial: monomial dimension");
    if (detail::coeff_is_zero(c))
      terms_.erase(m);
    else
      terms_[m] = c;
  }
  void add_term(const Monomial& m, const C& c) {
    if (m.dim() != n_) throw DimensionMismatch("polynomial: monomial dimension");
    auto it = terms_.find(m);
    if (it == terms_.end()) {
      if (!detail::coeff_is_zero(c)) terms_.emplace(m, c);
    } else {
      it->second = it->second + c;
      if (detail::coeff_is_zero(it->second)) terms_.erase(it);
    }
  }

  PolynomialT operator-() const {
    PolynomialT r(n_);
    for (const auto& [m, c] : terms_) r.terms_.emplace(m, -c);
    return r;
  }
  PolynomialT operator+(const PolynomialT& o) const {
    check_dim(o);
    PolynomialT r = *this;
    for (const auto& [m, c] : o.terms_) r.add_term(m, c);
    return r;
  }
  PolynomialT operator-(const PolynomialT& o) const {
    check_dim(o);
    PolynomialT r = *this;
    for (const auto& [m, c] : o.terms_) r.add_term(m, -c);
    return r;
  }
  PolynomialT operator*(const PolynomialT& o) const {
    check_dim(o);
    PolynomialT r(n_);
    for (const auto& [ma, ca] : terms_)
      for (const auto& [mb, cb] : o.terms_) r.add_term(ma * mb, ca * cb);
    return r;
  }
  PolynomialT scaled(const C& s) const {
    PolynomialT r(n_);
    if (detail::coeff_is_zero(s)) return r;
    for (const auto& [m, c] : terms_) r.terms_.emplace(m, c * s);
    return r;
  }
  PolynomialT pow(int k) const {
    if (k < 0) throw std::invalid_argument("polynomial: negative power");
    PolynomialT r = constant(n_, C(1));
    for (int i = 0; i < k; ++i) r = r * *this;
    return r;
  }

  bool operator==(const PolynomialT& o) const {
    return n_ == o.n_ && terms_ == o.terms_;
  }
  bool operator!=(const PolynomialT& o) const { return !(*this == o); }

  PolynomialT derivative(std::size_t axis) const {
    PolynomialT r(n_);
    for (const auto& [m, c] : terms_) {
      int e = m[axis];
      if (e == 0) continue;
      Monomial d = m;
      d[axis] = e - 1;
      r.add_term(d, c * C(e));
    }
    return r;
  }

  int total_degree() const {  // -1 for the zero polynomial
    if (terms_.empty()) return -1;
    return terms_.rbegin()->first.degree();
  }
  int min_degree() const {
    if (terms_.empty()) return -1;
    return terms_.begin()->first.degree();
  }
  int max_exponent(std::size_t axis) const {
    int mx = 0;
    for (const auto& [m, c] : terms_) mx = std::max(mx, m[axis]);
    return mx;
  }

  const std::pair<const Monomial, C>& leading_term() const {
    if (terms_.empty()) throw std::logic_error("polynomial: leading term of 0");
    return *terms_.rbegin();
  }

  /// Division with remainder by a single divisor. One divisor is a Groebner
  /// basis of its principal ideal, so r == 0 exactly when b divides *this.
  static void divmod(const PolynomialT& p, const PolynomialT& b, PolynomialT& q,
                     PolynomialT& r) {
    if (b.is_zero()) throw std::domain_error("polynomial: division by zero");
    p.check_dim(b);
    q = PolynomialT(p.n_);
    r = PolynomialT(p.n_);
    PolynomialT work = p;
    const auto& [bm, bc] = b.leading_term();
    while (!work.is_zero()) {
      const auto& [wm, wc] = work.leading_term();
      if (bm.divides(wm)) {
        Monomial t = wm.quotient(bm);
        C tc = wc / bc;
        PolynomialT piece(p.n_);
        piece.set(t, tc);
        q.add_term(t, tc);
        work = work - piece * b;
      } else {
        r.add_term(wm, wc);
        work.terms_.erase(wm);
      }
    }
  }

  template <typename Pt>
  C eval(std::span<const Pt> point) const {
    if (point.size() != n_) throw DimensionMismatch("polynomial: eval point");
    C acc(0);
    for (const auto& [m, c] : terms_) {
      C t = c;
      for (std::size_t i = 0; i < n_; ++i)
        for (int k = 0; k < m[i]; ++k) t = t * C(point[i]);
      acc = acc + t;
    }
    return acc;
  }
  C eval(const std::vector<C>& point) const {
    return eval(std::span<const C>(point));
  }

  std::string to_string(std::span<const std::string> names) const;

 private:
  std::size_t n_;
  Terms terms_;

  void check_dim(const PolynomialT& o) const {
    if (n_ != o.n_) throw DimensionMismatch("polynomial: dimension mismatch");
  }
};

using Polynomial = PolynomialT<Rational>;
using FPolynomial = PolynomialT<double>;

/// Explicit one-way conversion into the floating domain.
FPolynomial to_float(const Polynomial& p);
/// Exact lift of a floating polynomial (doubles are dyadic rationals).
Polynomial to_exact(const FPolynomial& p);

/// Canonical rendering: graded-lex from the highest term down, explicit signs.
std::string poly_to_string(const Polynomial& p, std::span<const std::string> names);
std::string poly_to_string(const FPolynomial& p, std::span<const std::string> names);

/// Display helper: coefficients snapped to `sig_figs` significant figures.
FPolynomial rounded_coefficients(const FPolynomial& p, int sig_figs);

std::vector<std::string> default_var_names(std::size_t n);

/// Fast evaluator for repeated floating evaluation of one polynomial.
class CompiledPoly {
 public:
  CompiledPoly() = default;
  explicit CompiledPoly(const FPolynomial& p);
  explicit CompiledPoly(const Polynomial& p) : CompiledPoly(to_float(p)) {}

  double eval(std::span<const double> x) const;
  std::size_t dim() const { return n_; }

 private:
  std::size_t n_ = 0;
  struct Term {
    double c;
    std::vector<int> e;
  };
  std::vector<Term> terms_;
};

}  // namespace agstab
