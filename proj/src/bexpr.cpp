#include "agstab/bexpr.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace agstab {

namespace {
std::string powers_msg(const std::vector<Rational>& ps) {
  std::string s = "clear_base: non-integer power gap among {";
  for (std::size_t i = 0; i < ps.size(); ++i) {
    if (i) s += ", ";
    s += ps[i].to_string();
  }
  return s + "}";
}
}  // namespace

NonIntegerGap::NonIntegerGap(std::vector<Rational> offending)
    : std::runtime_error(powers_msg(offending)), powers(std::move(offending)) {}

BExpr::BExpr(Polynomial base) : base_(std::move(base)) {
  if (base_.total_degree() < 1)
    throw std::invalid_argument("BExpr: base must be a non-constant polynomial");
}

BExpr::BExpr(Polynomial base, Polynomial coeff, Rational power)
    : BExpr(std::move(base)) {
  if (coeff.dim() != base_.dim())
    throw DimensionMismatch("BExpr: coefficient dimension");
  if (!coeff.is_zero()) terms_.push_back({std::move(power), std::move(coeff)});
  normalize();
}

BExpr BExpr::from_polynomial(Polynomial base, const Polynomial& p) {
  return BExpr(std::move(base), p, Rational(0));
}

void BExpr::check_compatible(const BExpr& o) const {
  if (base_.dim() != o.base_.dim())
    throw DimensionMismatch("BExpr: dimension mismatch");
  if (base_ != o.base_) throw BaseMismatch("BExpr: mismatched bases");
}

void BExpr::add_in(const Rational& power, const Polynomial& coeff) {
  if (coeff.is_zero()) return;
  auto it = std::find_if(terms_.begin(), terms_.end(),
                         [&](const Term& t) { return t.power == power; });
  if (it == terms_.end()) {
    terms_.push_back({power, coeff});
  } else {
    it->coeff = it->coeff + coeff;
  }
}

void BExpr::normalize() {
  // Merge equal powers, then reduce every coefficient mod the base and carry
  // quotients upward until all coefficients are normal forms mod (b).
  std::map<Rational, Polynomial> acc;
  for (auto& t : terms_) {
    auto it = acc.find(t.power);
    if (it == acc.end())
      acc.emplace(t.power, std::move(t.coeff));
    else
      it->second = it->second + t.coeff;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = acc.begin(); it != acc.end(); ++it) {
      if (it->second.is_zero()) continue;
      Polynomial q, r;
      Polynomial::divmod(it->second, base_, q, r);
      if (q.is_zero()) continue;
      it->second = r;
      Rational up = it->first + Rational(1);
      auto jt = acc.find(up);
      if (jt == acc.end())
        acc.emplace(up, q);
      else
        jt->second = jt->second + q;
      changed = true;
    }
  }
  terms_.clear();
  for (auto& [p, c] : acc)
    if (!c.is_zero()) terms_.push_back({p, std::move(c)});
}

BExpr BExpr::operator-() const {
  BExpr r = *this;
  for (auto& t : r.terms_) t.coeff = -t.coeff;
  return r;
}

BExpr BExpr::operator+(const BExpr& o) const {
  check_compatible(o);
  BExpr r = *this;
  for (const auto& t : o.terms_) r.add_in(t.power, t.coeff);
  r.normalize();
  return r;
}

BExpr BExpr::operator-(const BExpr& o) const { return *this + (-o); }

BExpr BExpr::operator*(const BExpr& o) const {
  check_compatible(o);
  BExpr r(base_);
  for (const auto& a : terms_)
    for (const auto& b : o.terms_)
      r.add_in(a.power + b.power, a.coeff * b.coeff);
  r.normalize();
  return r;
}

BExpr BExpr::scaled(const Rational& s) const {
  BExpr r(base_);
  if (s.is_zero()) return r;
  for (const auto& t : terms_) r.terms_.push_back({t.power, t.coeff.scaled(s)});
  return r;
}

BExpr BExpr::shifted(const Rational& q) const {
  BExpr r(base_);
  for (const auto& t : terms_) r.terms_.push_back({t.power + q, t.coeff});
  r.normalize();
  return r;
}

bool BExpr::operator==(const BExpr& o) const {
  if (base_ != o.base_ || terms_.size() != o.terms_.size()) return false;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (terms_[i].power != o.terms_[i].power) return false;
    if (terms_[i].coeff != o.terms_[i].coeff) return false;
  }
  return true;
}

BExpr BExpr::derivative(std::size_t axis) const {
  // d/dx (p * b^q) = p' b^q + q p b' b^(q-1)
  BExpr r(base_);
  Polynomial db = base_.derivative(axis);
  for (const auto& t : terms_) {
    r.add_in(t.power, t.coeff.derivative(axis));
    if (!t.power.is_zero())
      r.add_in(t.power - Rational(1), (t.coeff * db).scaled(t.power));
  }
  r.normalize();
  return r;
}

bool BExpr::is_polynomial() const {
  for (const auto& t : terms_)
    if (!t.power.is_integer() || t.power.signum() < 0) return false;
  return true;
}

Polynomial BExpr::to_polynomial() const {
  Polynomial out(base_.dim());
  for (const auto& t : terms_) {
    std::int64_t k = 0;
    if (!t.power.to_int64(k) || k < 0)
      throw std::logic_error("BExpr: not a polynomial");
    out = out + t.coeff * base_.pow(static_cast<int>(k));
  }
  return out;
}

std::pair<Polynomial, Rational> BExpr::clear_base() const {
  if (terms_.empty()) return {Polynomial(base_.dim()), Rational(0)};
  Rational shift = terms_.front().power;
  std::vector<Rational> offending;
  for (const auto& t : terms_) {
    Rational gap = t.power - shift;
    if (!gap.is_integer()) offending.push_back(t.power);
  }
  if (!offending.empty()) {
    offending.insert(offending.begin(), shift);
    throw NonIntegerGap(std::move(offending));
  }
  Polynomial out(base_.dim());
  for (const auto& t : terms_) {
    std::int64_t k = 0;
    (t.power - shift).to_int64(k);
    out = out + t.coeff * base_.pow(static_cast<int>(k));
  }
  return {out, shift};
}

double BExpr::evaluate(std::span<const double> point) const {
  if (point.size() != dim()) throw DimensionMismatch("BExpr: eval point");
  std::vector<Rational> pt;
  pt.reserve(point.size());
  for (double v : point) pt.push_back(Rational::from_double(v));
  Rational bval = base_.eval(pt);
  double bd = bval.to_double();
  double acc = 0.0;
  for (const auto& t : terms_) {
    if (bval.is_zero() && (t.power.signum() < 0 || !t.power.is_integer()))
      throw BaseVanishes("BExpr: base vanishes at evaluation point");
    if (bval.signum() < 0 && !t.power.is_integer())
      throw BaseVanishes(
          "BExpr: base negative at evaluation point with fractional power");
    double c = t.coeff.eval(pt).to_double();
    std::int64_t k = 0;
    if (t.power.to_int64(k)) {
      double p = 1.0;
      for (std::int64_t i = 0; i < std::llabs(k); ++i) p *= bd;
      acc += c * (k >= 0 ? p : 1.0 / p);
    } else {
      acc += c * std::pow(bd, t.power.to_double());
    }
  }
  return acc;
}

std::optional<Rational> BExpr::evaluate_exact(
    const std::vector<Rational>& point) const {
  if (point.size() != dim()) throw DimensionMismatch("BExpr: eval point");
  Rational bval = base_.eval(point);
  Rational acc(0);
  for (const auto& t : terms_) {
    Rational c = t.coeff.eval(point);
    if (c.is_zero()) continue;
    std::int64_t k = 0;
    Rational bpow(1);
    if (t.power.to_int64(k)) {
      if (bval.is_zero() && k < 0) return std::nullopt;
      for (std::int64_t i = 0; i < std::llabs(k); ++i) bpow *= bval;
      if (k < 0) bpow = Rational(1) / bpow;
    } else {
      // Only exact half powers of exact squares are representable.
      Rational twice = t.power * Rational(2);
      std::int64_t h = 0;
      Rational root;
      if (!twice.to_int64(h) || !bval.sqrt_exact(root)) return std::nullopt;
      if (root.is_zero() && h < 0) return std::nullopt;
      for (std::int64_t i = 0; i < std::llabs(h); ++i) bpow *= root;
      if (h < 0) bpow = Rational(1) / bpow;
    }
    acc += c * bpow;
  }
  return acc;
}

std::string BExpr::to_string(std::span<const std::string> names) const {
  if (terms_.empty()) return "0";
  std::string out;
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    if (!out.empty()) out += " + ";
    std::string c = poly_to_string(it->coeff, names);
    if (it->coeff.num_terms() > 1) c = "(" + c + ")";
    if (it->power.is_zero()) {
      out += c;
    } else {
      std::string b = "(" + poly_to_string(base_, names) + ")^(" +
                      it->power.to_string() + ")";
      out += c == "1" ? b : c + "*" + b;
    }
  }
  return out;
}

CompiledBExpr::CompiledBExpr(const BExpr& e) : n_(e.dim()) {
  base_ = CompiledPoly(to_float(e.base()));
  for (const auto& t : e.terms()) {
    Term ct;
    ct.coeff = CompiledPoly(to_float(t.coeff));
    ct.power = t.power.to_double();
    std::int64_t k = 0;
    ct.integral = t.power.to_int64(k);
    ct.ipow = static_cast<long>(k);
    if (!t.power.is_zero()) base_needed_ = true;
    terms_.push_back(std::move(ct));
  }
}

double CompiledBExpr::eval(std::span<const double> x) const {
  double bv = base_needed_ ? base_.eval(x) : 0.0;
  double acc = 0.0;
  for (const auto& t : terms_) {
    double c = t.coeff.eval(x);
    if (c == 0.0) continue;
    if (t.ipow == 0 && t.integral) {
      acc += c;
    } else if (t.integral) {
      double p = 1.0;
      for (long i = 0; i < std::labs(t.ipow); ++i) p *= bv;
      acc += c * (t.ipow >= 0 ? p : 1.0 / p);
    } else {
      acc += c * std::pow(bv, t.power);
    }
  }
  return acc;
}

}  // namespace agstab
