#include "agstab/poly.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace agstab {

std::string Monomial::to_string(std::span<const std::string> names) const {
  std::string out;
  for (std::size_t i = 0; i < e_.size(); ++i) {
    if (e_[i] == 0) continue;
    if (!out.empty()) out += "*";
    out += names[i];
    if (e_[i] > 1) out += "^" + std::to_string(e_[i]);
  }
  return out.empty() ? "1" : out;
}

namespace {

std::string coeff_str(const Rational& c) { return c.abs().to_string(); }

std::string coeff_str(double c) {
  // Shortest round-trip form.
  double v = c < 0 ? -c : c;
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }
  return std::string(buf, end);
}

template <typename C>
std::string render(const PolynomialT<C>& p, std::span<const std::string> names,
                   bool (*is_neg)(const C&), bool (*is_one)(const C&)) {
  if (p.is_zero()) return "0";
  std::string out;
  // Highest grlex term first.
  for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
    const auto& [m, c] = *it;
    bool neg = is_neg(c);
    if (out.empty()) {
      if (neg) out += "-";
    } else {
      out += neg ? " - " : " + ";
    }
    std::string ms = m.to_string(names);
    if (is_one(c) && ms != "1") {
      out += ms;
    } else if (ms == "1") {
      out += coeff_str(c);
    } else {
      out += coeff_str(c) + "*" + ms;
    }
  }
  return out;
}

}  // namespace

std::string poly_to_string(const Polynomial& p,
                           std::span<const std::string> names) {
  return render<Rational>(
      p, names, [](const Rational& c) { return c.signum() < 0; },
      [](const Rational& c) { return c.abs() == Rational(1); });
}

std::string poly_to_string(const FPolynomial& p,
                           std::span<const std::string> names) {
  return render<double>(
      p, names, [](const double& c) { return c < 0; },
      [](const double& c) { return c == 1.0 || c == -1.0; });
}

template <typename C>
std::string PolynomialT<C>::to_string(std::span<const std::string> names) const {
  return poly_to_string(*this, names);
}
template std::string PolynomialT<Rational>::to_string(
    std::span<const std::string>) const;
template std::string PolynomialT<double>::to_string(
    std::span<const std::string>) const;

FPolynomial rounded_coefficients(const FPolynomial& p, int sig_figs) {
  if (sig_figs <= 0) return p;
  FPolynomial out(p.dim());
  char buf[64];
  for (const auto& [m, c] : p.terms()) {
    std::snprintf(buf, sizeof buf, "%.*g", sig_figs, c);
    out.add_term(m, std::strtod(buf, nullptr));
  }
  return out;
}

FPolynomial to_float(const Polynomial& p) {
  FPolynomial r(p.dim());
  for (const auto& [m, c] : p.terms()) r.set(m, c.to_double());
  return r;
}

Polynomial to_exact(const FPolynomial& p) {
  Polynomial r(p.dim());
  for (const auto& [m, c] : p.terms()) r.set(m, Rational::from_double(c));
  return r;
}

std::vector<std::string> default_var_names(std::size_t n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 0; i < n; ++i) names.push_back("x" + std::to_string(i + 1));
  return names;
}

CompiledPoly::CompiledPoly(const FPolynomial& p) : n_(p.dim()) {
  for (const auto& [m, c] : p.terms()) {
    Term t;
    t.c = c;
    t.e.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) t.e[i] = m[i];
    terms_.push_back(std::move(t));
  }
}

double CompiledPoly::eval(std::span<const double> x) const {
  double acc = 0.0;
  for (const auto& t : terms_) {
    double v = t.c;
    for (std::size_t i = 0; i < n_; ++i) {
      double xi = x[i];
      for (int k = 0; k < t.e[i]; ++k) v *= xi;
    }
    acc += v;
  }
  return acc;
}

}  // namespace agstab
