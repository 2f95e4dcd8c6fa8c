#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace agstab {

/// Arbitrary-precision signed integer, sign-magnitude with base-2^32 limbs.
/// Only the operations needed for exact rational arithmetic are provided.
class BigInt {
 public:
  BigInt() = default;
  BigInt(std::int64_t v);

  static BigInt from_string(const std::string& s);

  bool is_zero() const { return mag_.empty(); }
  bool is_negative() const { return negative_; }
  int signum() const { return is_zero() ? 0 : (negative_ ? -1 : 1); }

  BigInt operator-() const;
  BigInt operator+(const BigInt& o) const;
  BigInt operator-(const BigInt& o) const;
  BigInt operator*(const BigInt& o) const;

  /// Truncated division: quotient rounds toward zero, remainder has the
  /// sign of the dividend and |r| < |divisor|.
  static void divmod(const BigInt& a, const BigInt& b, BigInt& q, BigInt& r);
  BigInt operator/(const BigInt& o) const;
  BigInt operator%(const BigInt& o) const;

  bool operator==(const BigInt& o) const {
    return negative_ == o.negative_ && mag_ == o.mag_;
  }
  bool operator!=(const BigInt& o) const { return !(*this == o); }
  bool operator<(const BigInt& o) const { return cmp(o) < 0; }
  bool operator<=(const BigInt& o) const { return cmp(o) <= 0; }
  bool operator>(const BigInt& o) const { return cmp(o) > 0; }
  bool operator>=(const BigInt& o) const { return cmp(o) >= 0; }

  static BigInt gcd(BigInt a, BigInt b);  // nonnegative result

  BigInt abs() const;
  int cmp(const BigInt& o) const;

  /// Number of significant bits in the magnitude (0 for zero).
  std::size_t bit_length() const;

  double to_double() const;
  /// Top bits as a double plus a base-2 exponent: value = m * 2^exp2.
  /// Never overflows, so ratios of huge integers stay representable.
  double mantissa(long& exp2) const;
  /// Exact value if it fits in int64, otherwise nullopt semantics via flag.
  bool fits_int64(std::int64_t& out) const;

  std::string to_string() const;

 private:
  bool negative_ = false;
  std::vector<std::uint32_t> mag_;  // little-endian limbs, no leading zeros

  void trim();
  static int cmp_mag(const std::vector<std::uint32_t>& a,
                     const std::vector<std::uint32_t>& b);
  static std::vector<std::uint32_t> add_mag(const std::vector<std::uint32_t>& a,
                                            const std::vector<std::uint32_t>& b);
  // requires |a| >= |b|
  static std::vector<std::uint32_t> sub_mag(const std::vector<std::uint32_t>& a,
                                            const std::vector<std::uint32_t>& b);
  static std::vector<std::uint32_t> mul_mag(const std::vector<std::uint32_t>& a,
                                            const std::vector<std::uint32_t>& b);
};

}  // namespace agstab
