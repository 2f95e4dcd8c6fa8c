#pragma once

#include <cstdint>
#include <string>

#include "agstab/bigint.hpp"

namespace agstab {

/// Exact rational number: reduced fraction with positive denominator.
class Rational {
 public:
  Rational() : num_(0), den_(1) {}
  Rational(std::int64_t v) : num_(v), den_(1) {}
  Rational(std::int64_t num, std::int64_t den);
  Rational(BigInt num, BigInt den);

  /// Exact conversion; every finite binary64 is a dyadic rational.
  static Rational from_double(double v);
  /// Parses "p", "p/q", or a decimal literal like "2.5" (exact).
  static Rational from_string(const std::string& s);

  const BigInt& num() const { return num_; }
  const BigInt& den() const { return den_; }

  bool is_zero() const { return num_.is_zero(); }
  bool is_integer() const { return den_ == BigInt(1); }
  int signum() const { return num_.signum(); }

  Rational operator-() const;
  Rational operator+(const Rational& o) const;
  Rational operator-(const Rational& o) const;
  Rational operator*(const Rational& o) const;
  Rational operator/(const Rational& o) const;
  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  bool operator==(const Rational& o) const {
    return num_ == o.num_ && den_ == o.den_;
  }
  bool operator!=(const Rational& o) const { return !(*this == o); }
  bool operator<(const Rational& o) const { return cmp(o) < 0; }
  bool operator<=(const Rational& o) const { return cmp(o) <= 0; }
  bool operator>(const Rational& o) const { return cmp(o) > 0; }
  bool operator>=(const Rational& o) const { return cmp(o) >= 0; }
  int cmp(const Rational& o) const;

  Rational abs() const;
  /// Floor of the exact value.
  BigInt floor() const;
  /// True and sets out when the value is an exact integer fitting int64.
  bool to_int64(std::int64_t& out) const;
  /// Exact square root when one exists in Q, otherwise returns false.
  bool sqrt_exact(Rational& out) const;

  double to_double() const;
  std::string to_string() const;  // "p" or "p/q"

 private:
  BigInt num_;
  BigInt den_;  // > 0

  void reduce();
};

}  // namespace agstab
