#include <algorithm>
#include <cmath>
#include <sstream>

#include "agstab/cli.hpp"

namespace agstab {

ParseError::ParseError(int ln, int col, std::string expect,
                       const std::string& found)
    : std::runtime_error("parse error at line " + std::to_string(ln) +
                         ", column " + std::to_string(col) + ": expected " +
                         expect + (found.empty() ? "" : ", found '" + found + "'")),
      line(ln),
      column(col),
      expected(std::move(expect)) {}

namespace {

struct Tok {
  enum Kind { Ident, Number, Punct, End } kind = End;
  std::string text;
  int line = 0, col = 0;
};

// Line-scoped tokenizer: '#' kills the rest of the line; newlines delimit
// statements and are surfaced as ';'-like breaks by the statement loop.
struct Lexer {
  const std::string& src;
  std::size_t pos = 0;
  int line = 1, col = 1;

  explicit Lexer(const std::string& s) : src(s) {}

  void bump(char c) {
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }
  // Returns the next token on the current line; kind End at line end/file end.
  Tok next_in_line() {
    while (pos < src.size()) {
      char c = src[pos];
      if (c == '#') {
        while (pos < src.size() && src[pos] != '\n') bump(src[pos]);
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        bump(c);
        continue;
      }
      break;
    }
    Tok t;
    t.line = line;
    t.col = col;
    if (pos >= src.size() || src[pos] == '\n') {
      t.kind = Tok::End;
      return t;
    }
    char c = src[pos];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      t.kind = Tok::Ident;
      while (pos < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[pos])) ||
              src[pos] == '_')) {
        t.text += src[pos];
        bump(src[pos]);
      }
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      t.kind = Tok::Number;
      bool seen_dot = false, seen_exp = false;
      while (pos < src.size()) {
        char d = src[pos];
        if (std::isdigit(static_cast<unsigned char>(d))) {
        } else if (d == '.' && !seen_dot && !seen_exp) {
          seen_dot = true;
        } else if ((d == 'e' || d == 'E') && !seen_exp &&
                   pos + 1 < src.size() &&
                   (std::isdigit(static_cast<unsigned char>(src[pos + 1])) ||
                    ((src[pos + 1] == '+' || src[pos + 1] == '-') &&
                     pos + 2 < src.size() &&
                     std::isdigit(static_cast<unsigned char>(src[pos + 2]))))) {
          seen_exp = true;
          t.text += src[pos];
          bump(src[pos]);
          if (src[pos] == '+' || src[pos] == '-') {
            t.text += src[pos];
            bump(src[pos]);
          }
          continue;
        } else {
          break;
        }
        t.text += src[pos];
        bump(src[pos]);
      }
      return t;
    }
    t.kind = Tok::Punct;
    t.text = std::string(1, c);
    bump(c);
    return t;
  }
  void skip_line_break() {
    while (pos < src.size() && src[pos] == '\n') bump('\n');
  }
  bool at_end() {
    // consume blank/comment-only space
    while (pos < src.size()) {
      char c = src[pos];
      if (c == '\n' || c == ' ' || c == '\t' || c == '\r') {
        bump(c);
      } else if (c == '#') {
        while (pos < src.size() && src[pos] != '\n') bump(src[pos]);
      } else {
        break;
      }
    }
    return pos >= src.size();
  }
};

// Exact rational from an integer/decimal/scientific literal.
Rational literal(const std::string& text, int line, int col) {
  try {
    auto e = text.find_first_of("eE");
    if (e == std::string::npos) return Rational::from_string(text);
    Rational mant = Rational::from_string(text.substr(0, e));
    long exp10 = std::stol(text.substr(e + 1));
    Rational ten(10);
    for (long i = 0; i < std::labs(exp10); ++i)
      mant = exp10 > 0 ? mant * ten : mant / ten;
    return mant;
  } catch (const std::exception&) {
    throw ParseError(line, col, "numeric literal", text);
  }
}

struct ExprParser {
  Lexer& lex;
  const std::vector<std::string>& vars;
  const Polynomial* base;  // null while parsing the base line itself
  Tok cur;

  ExprParser(Lexer& l, const std::vector<std::string>& v, const Polynomial* b)
      : lex(l), vars(v), base(b) {
    advance();
  }
  void advance() { cur = lex.next_in_line(); }
  bool is_punct(const char* s) const {
    return cur.kind == Tok::Punct && cur.text == s;
  }
  void expect_punct(const char* s) {
    if (!is_punct(s)) throw ParseError(cur.line, cur.col, std::string("'") + s + "'", cur.text);
    advance();
  }

  std::size_t dim() const { return vars.size(); }

  BExpr make(const Polynomial& p) const {
    return BExpr::from_polynomial(base_poly(), p);
  }
  const Polynomial& base_poly() const {
    if (base) return *base;
    throw std::logic_error("expression references the base before it is set");
  }

  struct Atom {
    BExpr value;
    bool base_ref = false;
  };

  Rational signed_rational() {
    bool neg = false;
    while (is_punct("-") || is_punct("+")) {
      if (is_punct("-")) neg = !neg;
      advance();
    }
    if (cur.kind != Tok::Number)
      throw ParseError(cur.line, cur.col, "number", cur.text);
    Rational r = literal(cur.text, cur.line, cur.col);
    advance();
    if (is_punct("/")) {
      advance();
      if (cur.kind != Tok::Number)
        throw ParseError(cur.line, cur.col, "denominator", cur.text);
      Rational den = literal(cur.text, cur.line, cur.col);
      if (den.is_zero())
        throw ParseError(cur.line, cur.col, "nonzero denominator", cur.text);
      r = r / den;
      advance();
    }
    return neg ? -r : r;
  }

  BExpr parse() {
    BExpr e = term();
    while (is_punct("+") || is_punct("-")) {
      bool minus = is_punct("-");
      advance();
      BExpr t = term();
      e = minus ? e - t : e + t;
    }
    return e;
  }

  BExpr term() {
    BExpr e = factor();
    while (is_punct("*")) {
      advance();
      e = e * factor();
    }
    return e;
  }

  BExpr factor() {
    if (is_punct("-")) {
      advance();
      return -factor();
    }
    Atom a = atom();
    if (!is_punct("^")) return a.value;
    advance();
    if (a.base_ref) {
      Rational q;
      if (is_punct("(")) {
        advance();
        q = signed_rational();
        expect_punct(")");
      } else {
        if (cur.kind != Tok::Number)
          throw ParseError(cur.line, cur.col, "exponent", cur.text);
        q = literal(cur.text, cur.line, cur.col);
        advance();
      }
      return BExpr(base_poly(), Polynomial::constant(dim(), Rational(1)), q);
    }
    if (cur.kind != Tok::Number)
      throw ParseError(cur.line, cur.col, "nonnegative integer exponent",
                       cur.text);
    Rational q = literal(cur.text, cur.line, cur.col);
    std::int64_t k = 0;
    if (!q.to_int64(k) || k < 0)
      throw ParseError(cur.line, cur.col, "nonnegative integer exponent",
                       cur.text);
    advance();
    BExpr out = make(Polynomial::constant(dim(), Rational(1)));
    for (std::int64_t i = 0; i < k; ++i) out = out * a.value;
    return out;
  }

  Atom atom() {
    if (is_punct("(")) {
      advance();
      BExpr e = parse();
      expect_punct(")");
      return {e, false};
    }
    if (cur.kind == Tok::Number) {
      Rational r = literal(cur.text, cur.line, cur.col);
      advance();
      if (is_punct("/")) {
        advance();
        if (cur.kind != Tok::Number)
          throw ParseError(cur.line, cur.col, "denominator", cur.text);
        Rational den = literal(cur.text, cur.line, cur.col);
        if (den.is_zero())
          throw ParseError(cur.line, cur.col, "nonzero denominator", cur.text);
        r = r / den;
        advance();
      }
      return {make(Polynomial::constant(dim(), r)), false};
    }
    if (cur.kind == Tok::Ident) {
      std::string name = cur.text;
      int ln = cur.line, cl = cur.col;
      advance();
      if (name == "b" &&
          std::find(vars.begin(), vars.end(), "b") == vars.end()) {
        if (!base)
          throw ParseError(ln, cl, "base declaration before use of 'b'", name);
        return {BExpr(base_poly(), Polynomial::constant(dim(), Rational(1)),
                      Rational(1)),
                true};
      }
      auto it = std::find(vars.begin(), vars.end(), name);
      if (it == vars.end())
        throw ParseError(ln, cl, "declared variable", name);
      return {make(Polynomial::variable(
                  dim(), static_cast<std::size_t>(it - vars.begin()))),
              false};
    }
    throw ParseError(cur.line, cur.col, "number, variable, or '('", cur.text);
  }
};

Polynomial expect_polynomial(const BExpr& e, int line) {
  if (!e.is_polynomial())
    throw ParseError(line, 1, "polynomial expression (no negative powers of b)",
                     "");
  return e.to_polynomial();
}

}  // namespace

SdeSystem ProblemFile::make_system() const {
  auto with_flag = [&](bool flag) {
    return SdeSystem(drift, noise, flag);
  };
  try {
    return with_flag(true);
  } catch (const std::invalid_argument&) {
    return with_flag(false);
  }
}

namespace {

// Default base when no `base =` line is present: 1 + sum of squares.
Polynomial default_base(std::size_t n) {
  Polynomial b = Polynomial::constant(n, Rational(1));
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = Polynomial::variable(n, i);
    b = b + xi * xi;
  }
  return b;
}

}  // namespace

ProblemFile parse_problem(const std::string& text) {
  ProblemFile out;

  // Pass 1: variable declarations and the base polynomial, so every other
  // line can reference them regardless of order (except `b` inside `base`).
  {
    Lexer scan(text);
    while (!scan.at_end()) {
      Tok head = scan.next_in_line();
      if (head.kind == Tok::Ident && head.text == "vars") {
        if (!out.variables.empty())
          throw ParseError(head.line, head.col, "a single vars line", "vars");
        Tok v = scan.next_in_line();
        while (v.kind == Tok::Ident) {
          out.variables.push_back(v.text);
          v = scan.next_in_line();
        }
        if (v.kind != Tok::End)
          throw ParseError(v.line, v.col, "variable name", v.text);
      } else {
        while (scan.next_in_line().kind != Tok::End) {
        }
      }
      scan.skip_line_break();
    }
  }
  if (out.variables.empty()) throw ParseError(1, 1, "a 'vars' declaration", "");
  for (const auto& v : out.variables)
    if (v == "b")
      throw ParseError(1, 1, "variable names distinct from the base symbol 'b'",
                       v);
  const std::size_t n = out.variables.size();

  const Polynomial placeholder = default_base(n);
  {
    Lexer scan(text);
    while (!scan.at_end()) {
      Tok head = scan.next_in_line();
      if (head.kind == Tok::Ident && head.text == "base") {
        ExprParser ep(scan, out.variables, &placeholder);
        ep.expect_punct("=");
        BExpr e = ep.parse();
        if (ep.cur.kind != Tok::End)
          throw ParseError(ep.cur.line, ep.cur.col, "end of line", ep.cur.text);
        out.base = expect_polynomial(e, head.line);
        if (out.base.total_degree() < 1)
          throw ParseError(head.line, head.col,
                           "a non-constant base polynomial", "");
        out.base_declared = true;
      } else {
        while (scan.next_in_line().kind != Tok::End) {
        }
      }
      scan.skip_line_break();
    }
  }
  if (!out.base_declared) out.base = default_base(n);

  // Pass 2: everything else, expressions now over the real base.
  Lexer lex(text);
  bool have_drift = false;
  while (!lex.at_end()) {
    Tok head = lex.next_in_line();
    if (head.kind != Tok::Ident)
      throw ParseError(head.line, head.col, "statement keyword", head.text);
    const std::string& kw = head.text;

    auto parse_vector = [&](ExprParser& ep) {
      std::vector<BExpr> entries;
      ep.expect_punct("[");
      while (true) {
        entries.push_back(ep.parse());
        if (ep.is_punct(",")) {
          ep.advance();
          continue;
        }
        break;
      }
      ep.expect_punct("]");
      if (entries.size() != n)
        throw ParseError(head.line, head.col,
                         std::to_string(n) + " vector components",
                         std::to_string(entries.size()));
      return entries;
    };
    auto end_of_line = [&](ExprParser& ep) {
      if (ep.cur.kind != Tok::End)
        throw ParseError(ep.cur.line, ep.cur.col, "end of line", ep.cur.text);
    };

    if (kw == "vars" || kw == "base") {
      while (lex.next_in_line().kind != Tok::End) {
      }
    } else if (kw == "drift") {
      ExprParser ep(lex, out.variables, &out.base);
      ep.expect_punct("=");
      out.drift = parse_vector(ep);
      end_of_line(ep);
      have_drift = true;
    } else if (kw == "noise") {
      ExprParser ep(lex, out.variables, &out.base);
      if (ep.cur.kind != Tok::Number)
        throw ParseError(ep.cur.line, ep.cur.col, "noise column index",
                         ep.cur.text);
      std::int64_t idx = 0;
      literal(ep.cur.text, ep.cur.line, ep.cur.col).to_int64(idx);
      ep.advance();
      ep.expect_punct("=");
      auto col = parse_vector(ep);
      end_of_line(ep);
      if (idx < 1 || idx > 64)
        throw ParseError(head.line, head.col, "noise index in 1..64",
                         std::to_string(idx));
      if (out.noise.size() < static_cast<std::size_t>(idx))
        out.noise.resize(idx, std::vector<BExpr>());
      out.noise[idx - 1] = std::move(col);
    } else if (kw == "control") {
      ExprParser ep(lex, out.variables, &out.base);
      ep.expect_punct("=");
      out.control = parse_vector(ep);
      end_of_line(ep);
    } else if (kw == "controller") {
      ExprParser ep(lex, out.variables, &out.base);
      ep.expect_punct("=");
      out.controller = expect_polynomial(ep.parse(), head.line);
      end_of_line(ep);
    } else if (kw == "density") {
      ExprParser ep(lex, out.variables, &out.base);
      if (!(ep.cur.kind == Tok::Ident && ep.cur.text == "a"))
        throw ParseError(ep.cur.line, ep.cur.col, "'a ='", ep.cur.text);
      ep.advance();
      ep.expect_punct("=");
      Polynomial a = expect_polynomial(ep.parse(), head.line);
      ep.expect_punct(";");
      if (!(ep.cur.kind == Tok::Ident && ep.cur.text == "gamma"))
        throw ParseError(ep.cur.line, ep.cur.col, "'gamma ='", ep.cur.text);
      ep.advance();
      ep.expect_punct("=");
      Rational gamma = ep.signed_rational();
      end_of_line(ep);
      out.density = DensityCandidate{std::move(a), out.base, gamma};
    } else if (kw == "synthesis") {
      ExprParser ep(lex, out.variables, &out.base);
      ProblemFile::Synthesis syn;
      bool saw_c = false;
      while (true) {
        if (ep.cur.kind != Tok::Ident)
          throw ParseError(ep.cur.line, ep.cur.col, "deg_a, deg_c, or lambda",
                           ep.cur.text);
        std::string key = ep.cur.text;
        ep.advance();
        ep.expect_punct("=");
        Rational v = ep.signed_rational();
        if (key == "deg_a") {
          std::int64_t k = 0;
          if (!v.to_int64(k) || k < 0 || k > 32)
            throw ParseError(head.line, head.col, "deg_a in 0..32", "");
          syn.deg_a = static_cast<int>(k);
        } else if (key == "deg_c") {
          std::int64_t k = 0;
          if (!v.to_int64(k) || k < 1 || k > 32)
            throw ParseError(head.line, head.col, "deg_c in 1..32", "");
          syn.deg_c = static_cast<int>(k);
          saw_c = true;
        } else if (key == "lambda") {
          syn.lambda = v.to_double();
          if (syn.lambda <= 0)
            throw ParseError(head.line, head.col, "positive lambda", "");
        } else if (key == "gamma") {
          syn.gamma = v;
        } else {
          throw ParseError(head.line, head.col,
                           "deg_a, deg_c, lambda, or gamma", key);
        }
        if (ep.is_punct(";")) {
          ep.advance();
          continue;
        }
        break;
      }
      end_of_line(ep);
      if (!saw_c)
        throw ParseError(head.line, head.col, "deg_c in the synthesis line", "");
      out.synthesis = syn;
    } else if (kw == "constraint") {
      ExprParser ep(lex, out.variables, &out.base);
      ep.expect_punct("=");
      out.constraints.push_back(expect_polynomial(ep.parse(), head.line));
      end_of_line(ep);
    } else if (kw == "sim") {
      ExprParser ep(lex, out.variables, &out.base);
      out.sim_declared = true;
      while (true) {
        if (ep.cur.kind != Tok::Ident)
          throw ParseError(ep.cur.line, ep.cur.col, "simulation key",
                           ep.cur.text);
        std::string key = ep.cur.text;
        int kl = ep.cur.line, kc = ep.cur.col;
        ep.advance();
        ep.expect_punct("=");
        if (key == "init") {
          if (ep.cur.kind != Tok::Ident)
            throw ParseError(ep.cur.line, ep.cur.col, "box/sphere/points",
                             ep.cur.text);
          std::string which = ep.cur.text;
          ep.advance();
          if (which == "box") {
            ep.expect_punct("(");
            out.sim.box_lo = ep.signed_rational().to_double();
            ep.expect_punct(",");
            out.sim.box_hi = ep.signed_rational().to_double();
            ep.expect_punct(")");
            out.sim.init = SimConfig::Init::Box;
          } else if (which == "sphere") {
            ep.expect_punct("(");
            out.sim.sphere_radius = ep.signed_rational().to_double();
            ep.expect_punct(")");
            out.sim.init = SimConfig::Init::Sphere;
          } else if (which == "points") {
            ep.expect_punct("(");
            out.sim.fixed_points.clear();
            while (true) {
              ep.expect_punct("(");
              std::vector<double> pt;
              while (true) {
                pt.push_back(ep.signed_rational().to_double());
                if (ep.is_punct(",")) {
                  ep.advance();
                  continue;
                }
                break;
              }
              ep.expect_punct(")");
              if (pt.size() != n)
                throw ParseError(kl, kc, std::to_string(n) + "-dimensional point",
                                 std::to_string(pt.size()));
              out.sim.fixed_points.push_back(std::move(pt));
              if (ep.is_punct(",")) {
                ep.advance();
                continue;
              }
              break;
            }
            ep.expect_punct(")");
            out.sim.init = SimConfig::Init::Fixed;
          } else {
            throw ParseError(kl, kc, "box, sphere, or points", which);
          }
        } else {
          Rational v = ep.signed_rational();
          if (key == "h") {
            out.sim.step = v.to_double();
          } else if (key == "T") {
            out.sim.horizon = v.to_double();
          } else if (key == "paths") {
            std::int64_t k = 0;
            if (!v.to_int64(k) || k < 1 || k > 100000000)
              throw ParseError(kl, kc, "paths in 1..1e8", "");
            out.sim.paths = static_cast<int>(k);
          } else if (key == "seed") {
            std::int64_t k = 0;
            v.to_int64(k);
            out.sim.seed = static_cast<std::uint64_t>(k);
          } else if (key == "eps_conv") {
            out.sim.eps_conv = v.to_double();
          } else if (key == "dwell") {
            out.sim.dwell_fraction = v.to_double();
          } else if (key == "r_escape") {
            out.sim.r_escape = v.to_double();
          } else if (key == "exclude_radius") {
            out.sim.exclude_radius = v.to_double();
          } else if (key == "track_jacobian") {
            std::int64_t k = 0;
            v.to_int64(k);
            out.sim.track_jacobian = k != 0;
          } else {
            throw ParseError(kl, kc, "known simulation key", key);
          }
        }
        if (ep.is_punct(";")) {
          ep.advance();
          continue;
        }
        break;
      }
      end_of_line(ep);
    } else {
      throw ParseError(head.line, head.col,
                       "vars/base/drift/noise/control/controller/density/"
                       "synthesis/constraint/sim",
                       kw);
    }
    lex.skip_line_break();
  }

  if (!have_drift)
    throw ParseError(1, 1, "a drift declaration", "");
  for (std::size_t k = 0; k < out.noise.size(); ++k)
    if (out.noise[k].empty())
      throw ParseError(1, 1, "contiguous noise indices",
                       "missing noise " + std::to_string(k + 1));
  return out;
}

std::string render_problem(const ProblemFile& p) {
  std::ostringstream out;
  std::vector<std::string> names = p.variables;
  out << "vars";
  for (const auto& v : p.variables) out << " " << v;
  out << "\n";
  if (p.base_declared)
    out << "base = " << poly_to_string(p.base, names) << "\n";
  auto render_vec = [&](const char* kw, const std::vector<BExpr>& v,
                        const std::string& suffix = "") {
    out << kw << suffix << " = [";
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out << ", ";
      auto [poly, shift] = v[i].clear_base();
      if (shift.is_zero()) {
        out << poly_to_string(poly, names);
      } else {
        out << "(" << poly_to_string(poly, names) << ")*b^(" << shift.to_string()
            << ")";
      }
    }
    out << "]\n";
  };
  render_vec("drift", p.drift);
  for (std::size_t k = 0; k < p.noise.size(); ++k)
    render_vec("noise", p.noise[k], " " + std::to_string(k + 1));
  if (!p.control.empty()) render_vec("control", p.control);
  if (p.controller)
    out << "controller = " << poly_to_string(*p.controller, names) << "\n";
  if (p.density)
    out << "density a = " << poly_to_string(p.density->a, names)
        << "; gamma = " << p.density->gamma.to_string() << "\n";
  if (p.synthesis) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", p.synthesis->lambda);
    out << "synthesis deg_a = " << p.synthesis->deg_a
        << "; deg_c = " << p.synthesis->deg_c << "; lambda = " << buf
        << "; gamma = " << p.synthesis->gamma.to_string() << "\n";
  }
  for (const auto& g : p.constraints)
    out << "constraint = " << poly_to_string(g, names) << "\n";
  if (p.sim_declared) {
    char buf[64];
    auto num = [&buf](double v) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return std::string(buf);
    };
    out << "sim h = " << num(p.sim.step) << "; T = " << num(p.sim.horizon)
        << "; paths = " << p.sim.paths << "; seed = " << p.sim.seed
        << "; eps_conv = " << num(p.sim.eps_conv)
        << "; dwell = " << num(p.sim.dwell_fraction)
        << "; r_escape = " << num(p.sim.r_escape)
        << "; exclude_radius = " << num(p.sim.exclude_radius);
    if (p.sim.track_jacobian) out << "; track_jacobian = 1";
    out << "; init = ";
    switch (p.sim.init) {
      case SimConfig::Init::Box:
        out << "box(" << num(p.sim.box_lo) << ", " << num(p.sim.box_hi) << ")";
        break;
      case SimConfig::Init::Sphere:
        out << "sphere(" << num(p.sim.sphere_radius) << ")";
        break;
      case SimConfig::Init::Fixed: {
        out << "points(";
        for (std::size_t i = 0; i < p.sim.fixed_points.size(); ++i) {
          if (i) out << ", ";
          out << "(";
          for (std::size_t j = 0; j < p.sim.fixed_points[i].size(); ++j) {
            if (j) out << ", ";
            out << num(p.sim.fixed_points[i][j]);
          }
          out << ")";
        }
        out << ")";
        break;
      }
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace agstab
