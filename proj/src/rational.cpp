#include "agstab/rational.hpp"

#include <cmath>
#include <stdexcept>

namespace agstab {

Rational::Rational(std::int64_t num, std::int64_t den) : num_(num), den_(den) {
  if (den == 0) throw std::domain_error("Rational: zero denominator");
  reduce();
}

Rational::Rational(BigInt num, BigInt den)
    : num_(std::move(num)), den_(std::move(den)) {
  if (den_.is_zero()) throw std::domain_error("Rational: zero denominator");
  reduce();
}

void Rational::reduce() {
  if (den_.is_negative()) {
    num_ = -num_;
    den_ = -den_;
  }
  if (num_.is_zero()) {
    den_ = BigInt(1);
    return;
  }
  BigInt g = BigInt::gcd(num_, den_);
  if (g != BigInt(1)) {
    num_ = num_ / g;
    den_ = den_ / g;
  }
}

Rational Rational::from_double(double v) {
  if (!std::isfinite(v)) throw std::domain_error("Rational: non-finite double");
  if (v == 0.0) return Rational(0);
  int exp = 0;
  double mant = std::frexp(v, &exp);  // v = mant * 2^exp, |mant| in [0.5,1)
  // 53 bits of mantissa.
  std::int64_t m = static_cast<std::int64_t>(std::ldexp(mant, 53));
  exp -= 53;
  BigInt num(m), den(1);
  const BigInt two(2);
  if (exp > 0) {
    for (int i = 0; i < exp; ++i) num = num * two;
  } else {
    for (int i = 0; i < -exp; ++i) den = den * two;
  }
  return Rational(std::move(num), std::move(den));
}

Rational Rational::from_string(const std::string& s) {
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    BigInt n = BigInt::from_string(s.substr(0, slash));
    BigInt d = BigInt::from_string(s.substr(slash + 1));
    return Rational(std::move(n), std::move(d));
  }
  auto dot = s.find('.');
  if (dot != std::string::npos) {
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    std::size_t frac = s.size() - dot - 1;
    BigInt n = BigInt::from_string(digits);
    BigInt d(1);
    const BigInt ten(10);
    for (std::size_t i = 0; i < frac; ++i) d = d * ten;
    return Rational(std::move(n), std::move(d));
  }
  return Rational(BigInt::from_string(s), BigInt(1));
}

Rational Rational::operator-() const {
  Rational r = *this;
  r.num_ = -r.num_;
  return r;
}

Rational Rational::operator+(const Rational& o) const {
  return Rational(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
}

Rational Rational::operator-(const Rational& o) const {
  return Rational(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
}

Rational Rational::operator*(const Rational& o) const {
  return Rational(num_ * o.num_, den_ * o.den_);
}

Rational Rational::operator/(const Rational& o) const {
  if (o.is_zero()) throw std::domain_error("Rational: division by zero");
  return Rational(num_ * o.den_, den_ * o.num_);
}

int Rational::cmp(const Rational& o) const {
  return (num_ * o.den_).cmp(o.num_ * den_);
}

Rational Rational::abs() const {
  Rational r = *this;
  r.num_ = r.num_.abs();
  return r;
}

BigInt Rational::floor() const {
  BigInt q, r;
  BigInt::divmod(num_, den_, q, r);
  if (!r.is_zero() && num_.is_negative()) q = q - BigInt(1);
  return q;
}

bool Rational::to_int64(std::int64_t& out) const {
  if (!is_integer()) return false;
  return num_.fits_int64(out);
}

bool Rational::sqrt_exact(Rational& out) const {
  if (signum() < 0) return false;
  if (is_zero()) {
    out = Rational(0);
    return true;
  }
  auto isqrt = [](const BigInt& v, BigInt& root) {
    // Newton iteration on integers.
    BigInt x = v, prev(0);
    if (v <= BigInt(1)) {
      root = v;
      return v * v == v;
    }
    // start from 2^ceil(bits/2)
    BigInt one(1);
    std::size_t half = (v.bit_length() + 1) / 2;
    x = one;
    for (std::size_t i = 0; i < half; ++i) x = x * BigInt(2);
    while (true) {
      BigInt next = (x + v / x) / BigInt(2);
      if (next >= x) break;
      x = next;
    }
    root = x;
    return x * x == v;
  };
  BigInt rn, rd;
  if (!isqrt(num_, rn)) return false;
  if (!isqrt(den_, rd)) return false;
  out = Rational(std::move(rn), std::move(rd));
  return true;
}

double Rational::to_double() const {
  if (num_.is_zero()) return 0.0;
  long en = 0, ed = 0;
  double mn = num_.mantissa(en);
  double md = den_.mantissa(ed);
  return std::ldexp(mn / md, static_cast<int>(en - ed));
}

std::string Rational::to_string() const {
  if (is_integer()) return num_.to_string();
  return num_.to_string() + "/" + den_.to_string();
}

}  // namespace agstab
