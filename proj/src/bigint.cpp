#include "agstab/bigint.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace agstab {

namespace {
constexpr std::uint64_t kBase = 1ull << 32;
}

BigInt::BigInt(std::int64_t v) {
  negative_ = v < 0;
  std::uint64_t u = negative_ ? (~static_cast<std::uint64_t>(v) + 1) :
                                static_cast<std::uint64_t>(v);
  while (u != 0) {
    mag_.push_back(static_cast<std::uint32_t>(u & 0xffffffffu));
    u >>= 32;
  }
}

BigInt BigInt::from_string(const std::string& s) {
  BigInt r;
  std::size_t i = 0;
  bool neg = false;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
    neg = s[i] == '-';
    ++i;
  }
  if (i == s.size()) throw std::invalid_argument("BigInt: empty literal");
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9')
      throw std::invalid_argument("BigInt: bad digit in literal");
    r = r * BigInt(10) + BigInt(s[i] - '0');
  }
  r.negative_ = neg && !r.is_zero();
  return r;
}

void BigInt::trim() {
  while (!mag_.empty() && mag_.back() == 0) mag_.pop_back();
  if (mag_.empty()) negative_ = false;
}

int BigInt::cmp_mag(const std::vector<std::uint32_t>& a,
                    const std::vector<std::uint32_t>& b) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  for (std::size_t i = a.size(); i-- > 0;) {
    if (a[i] != b[i]) return a[i] < b[i] ? -1 : 1;
  }
  return 0;
}

std::vector<std::uint32_t> BigInt::add_mag(const std::vector<std::uint32_t>& a,
                                           const std::vector<std::uint32_t>& b) {
  const auto& lo = a.size() >= b.size() ? b : a;
  const auto& hi = a.size() >= b.size() ? a : b;
  std::vector<std::uint32_t> out(hi.size() + 1, 0);
  std::uint64_t carry = 0;
  for (std::size_t i = 0; i < hi.size(); ++i) {
    std::uint64_t s = carry + hi[i] + (i < lo.size() ? lo[i] : 0u);
    out[i] = static_cast<std::uint32_t>(s & 0xffffffffu);
    carry = s >> 32;
  }
  out[hi.size()] = static_cast<std::uint32_t>(carry);
  while (!out.empty() && out.back() == 0) out.pop_back();
  return out;
}

std::vector<std::uint32_t> BigInt::sub_mag(const std::vector<std::uint32_t>& a,
                                           const std::vector<std::uint32_t>& b) {
  std::vector<std::uint32_t> out(a.size(), 0);
  std::int64_t borrow = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::int64_t d = static_cast<std::int64_t>(a[i]) - borrow -
                     (i < b.size() ? static_cast<std::int64_t>(b[i]) : 0);
    if (d < 0) {
      d += static_cast<std::int64_t>(kBase);
      borrow = 1;
    } else {
      borrow = 0;
    }
    out[i] = static_cast<std::uint32_t>(d);
  }
  while (!out.empty() && out.back() == 0) out.pop_back();
  return out;
}

std::vector<std::uint32_t> BigInt::mul_mag(const std::vector<std::uint32_t>& a,
                                           const std::vector<std::uint32_t>& b) {
  if (a.empty() || b.empty()) return {};
  std::vector<std::uint32_t> out(a.size() + b.size(), 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::uint64_t carry = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      std::uint64_t cur = out[i + j] +
                          static_cast<std::uint64_t>(a[i]) * b[j] + carry;
      out[i + j] = static_cast<std::uint32_t>(cur & 0xffffffffu);
      carry = cur >> 32;
    }
    std::size_t k = i + b.size();
    while (carry != 0) {
      std::uint64_t cur = out[k] + carry;
      out[k] = static_cast<std::uint32_t>(cur & 0xffffffffu);
      carry = cur >> 32;
      ++k;
    }
  }
  while (!out.empty() && out.back() == 0) out.pop_back();
  return out;
}

BigInt BigInt::operator-() const {
  BigInt r = *this;
  if (!r.is_zero()) r.negative_ = !r.negative_;
  return r;
}

BigInt BigInt::operator+(const BigInt& o) const {
  BigInt r;
  if (negative_ == o.negative_) {
    r.mag_ = add_mag(mag_, o.mag_);
    r.negative_ = negative_;
  } else {
    int c = cmp_mag(mag_, o.mag_);
    if (c == 0) return BigInt();
    if (c > 0) {
      r.mag_ = sub_mag(mag_, o.mag_);
      r.negative_ = negative_;
    } else {
      r.mag_ = sub_mag(o.mag_, mag_);
      r.negative_ = o.negative_;
    }
  }
  r.trim();
  return r;
}

BigInt BigInt::operator-(const BigInt& o) const { return *this + (-o); }

BigInt BigInt::operator*(const BigInt& o) const {
  BigInt r;
  r.mag_ = mul_mag(mag_, o.mag_);
  r.negative_ = !r.mag_.empty() && (negative_ != o.negative_);
  return r;
}

// Knuth TAOCP vol. 2, Algorithm D, base 2^32.
void BigInt::divmod(const BigInt& a, const BigInt& b, BigInt& q, BigInt& r) {
  if (b.is_zero()) throw std::domain_error("BigInt: division by zero");
  int c = cmp_mag(a.mag_, b.mag_);
  if (c < 0) {
    q = BigInt();
    r = a;
    return;
  }
  if (b.mag_.size() == 1) {
    std::uint64_t d = b.mag_[0];
    std::vector<std::uint32_t> qm(a.mag_.size(), 0);
    std::uint64_t rem = 0;
    for (std::size_t i = a.mag_.size(); i-- > 0;) {
      std::uint64_t cur = (rem << 32) | a.mag_[i];
      qm[i] = static_cast<std::uint32_t>(cur / d);
      rem = cur % d;
    }
    q = BigInt();
    q.mag_ = std::move(qm);
    q.trim();
    q.negative_ = !q.mag_.empty() && (a.negative_ != b.negative_);
    r = BigInt(static_cast<std::int64_t>(rem));
    if (!r.is_zero()) r.negative_ = a.negative_;
    return;
  }

  // Normalize so the divisor's top limb has its high bit set.
  int shift = 0;
  {
    std::uint32_t top = b.mag_.back();
    while ((top & 0x80000000u) == 0) {
      top <<= 1;
      ++shift;
    }
  }
  auto shl = [](const std::vector<std::uint32_t>& v, int s) {
    std::vector<std::uint32_t> out(v.size() + 1, 0);
    if (s == 0) {
      out.assign(v.begin(), v.end());
      out.push_back(0);
      return out;
    }
    std::uint32_t carry = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      out[i] = (v[i] << s) | carry;
      carry = static_cast<std::uint32_t>(
          (static_cast<std::uint64_t>(v[i]) >> (32 - s)) & 0xffffffffu);
    }
    out[v.size()] = carry;
    return out;
  };
  std::vector<std::uint32_t> u = shl(a.mag_, shift);   // n+m+1 limbs
  std::vector<std::uint32_t> v = shl(b.mag_, shift);
  while (!v.empty() && v.back() == 0) v.pop_back();
  const std::size_t n = v.size();
  const std::size_t m = u.size() - n - 1;
  std::vector<std::uint32_t> qm(m + 1, 0);

  const std::uint64_t vn1 = v[n - 1];
  const std::uint64_t vn2 = n >= 2 ? v[n - 2] : 0;
  for (std::size_t j = m + 1; j-- > 0;) {
    std::uint64_t num = (static_cast<std::uint64_t>(u[j + n]) << 32) | u[j + n - 1];
    std::uint64_t qhat = num / vn1;
    std::uint64_t rhat = num % vn1;
    while (qhat >= kBase ||
           qhat * vn2 > ((rhat << 32) | (n >= 2 ? u[j + n - 2] : 0))) {
      --qhat;
      rhat += vn1;
      if (rhat >= kBase) break;
    }
    // Multiply-subtract qhat*v from u[j..j+n].
    std::int64_t borrow = 0;
    std::uint64_t carry = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t p = qhat * v[i] + carry;
      carry = p >> 32;
      std::int64_t d = static_cast<std::int64_t>(u[i + j]) -
                       static_cast<std::int64_t>(p & 0xffffffffu) - borrow;
      if (d < 0) {
        d += static_cast<std::int64_t>(kBase);
        borrow = 1;
      } else {
        borrow = 0;
      }
      u[i + j] = static_cast<std::uint32_t>(d);
    }
    std::int64_t d = static_cast<std::int64_t>(u[j + n]) -
                     static_cast<std::int64_t>(carry) - borrow;
    if (d < 0) {
      // qhat was one too large: add back.
      d += static_cast<std::int64_t>(kBase);
      --qhat;
      std::uint64_t c2 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t s = static_cast<std::uint64_t>(u[i + j]) + v[i] + c2;
        u[i + j] = static_cast<std::uint32_t>(s & 0xffffffffu);
        c2 = s >> 32;
      }
      d += static_cast<std::int64_t>(c2);
      d &= 0xffffffff;
    }
    u[j + n] = static_cast<std::uint32_t>(d);
    qm[j] = static_cast<std::uint32_t>(qhat);
  }

  // Denormalize remainder.
  std::vector<std::uint32_t> rm(n, 0);
  if (shift == 0) {
    for (std::size_t i = 0; i < n; ++i) rm[i] = u[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t hi = (i + 1 < u.size()) ? u[i + 1] : 0;
      rm[i] = static_cast<std::uint32_t>((u[i] >> shift) | (hi << (32 - shift)));
    }
  }
  q = BigInt();
  q.mag_ = std::move(qm);
  q.trim();
  q.negative_ = !q.mag_.empty() && (a.negative_ != b.negative_);
  r = BigInt();
  r.mag_ = std::move(rm);
  r.trim();
  r.negative_ = !r.mag_.empty() && a.negative_;
}

BigInt BigInt::operator/(const BigInt& o) const {
  BigInt q, r;
  divmod(*this, o, q, r);
  return q;
}

BigInt BigInt::operator%(const BigInt& o) const {
  BigInt q, r;
  divmod(*this, o, q, r);
  return r;
}

int BigInt::cmp(const BigInt& o) const {
  if (negative_ != o.negative_) return negative_ ? -1 : 1;
  int c = cmp_mag(mag_, o.mag_);
  return negative_ ? -c : c;
}

BigInt BigInt::abs() const {
  BigInt r = *this;
  r.negative_ = false;
  return r;
}

BigInt BigInt::gcd(BigInt a, BigInt b) {
  a.negative_ = false;
  b.negative_ = false;
  while (!b.is_zero()) {
    BigInt q, r;
    divmod(a, b, q, r);
    a = b;
    b = r;
  }
  return a;
}

std::size_t BigInt::bit_length() const {
  if (mag_.empty()) return 0;
  std::uint32_t top = mag_.back();
  std::size_t bits = (mag_.size() - 1) * 32;
  while (top != 0) {
    ++bits;
    top >>= 1;
  }
  return bits;
}

double BigInt::mantissa(long& exp2) const {
  if (mag_.empty()) {
    exp2 = 0;
    return 0.0;
  }
  // Accumulate the top ~96 bits; exact for small values.
  std::size_t start = mag_.size() > 3 ? mag_.size() - 3 : 0;
  double v = 0.0;
  for (std::size_t i = mag_.size(); i-- > start;) v = v * 4294967296.0 + mag_[i];
  exp2 = static_cast<long>(32 * start);
  return negative_ ? -v : v;
}

double BigInt::to_double() const {
  long e = 0;
  double m = mantissa(e);
  return std::ldexp(m, static_cast<int>(e));
}

bool BigInt::fits_int64(std::int64_t& out) const {
  if (bit_length() > 63) return false;
  std::uint64_t u = 0;
  for (std::size_t i = mag_.size(); i-- > 0;) u = (u << 32) | mag_[i];
  out = negative_ ? -static_cast<std::int64_t>(u) : static_cast<std::int64_t>(u);
  return true;
}

std::string BigInt::to_string() const {
  if (is_zero()) return "0";
  BigInt t = abs();
  const BigInt chunk(1000000000);
  std::string out;
  while (!t.is_zero()) {
    BigInt q, r;
    divmod(t, chunk, q, r);
    std::int64_t piece = 0;
    r.fits_int64(piece);
    std::string s = std::to_string(piece);
    t = q;
    if (t.is_zero()) {
      out.insert(0, s);
    } else {
      out.insert(0, std::string(9 - s.size(), '0') + s);
    }
  }
  return negative_ ? "-" + out : out;
}

}  // namespace agstab
