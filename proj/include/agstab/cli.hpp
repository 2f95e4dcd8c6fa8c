#pragma once

#include <optional>
#include <string>
#include <vector>

#include "agstab/mc.hpp"
#include "agstab/synth.hpp"

namespace agstab {

struct ParseError : std::runtime_error {
  int line;
  int column;
  std::string expected;
  ParseError(int ln, int col, std::string expect, const std::string& found);
};

/// Parsed problem description.  Line grammar, '#' comments:
///   vars x y z
///   base = x^2 + y^2
///   drift = [2*x^3 + x^2*y, 0]
///   noise 1 = [x^2 + y^2, -(x^2 + y^2)]
///   control = [0, 1]
///   controller = -2*x^3          (optional fixed feedback for simulate)
///   density a = 1; gamma = 5/2
///   synthesis deg_a = 0; deg_c = 3; lambda = 1
///   constraint = 2*z - 2*z^2 - x^2 - y^2
///   sim h = 1e-3; T = 30; paths = 1000; seed = 7; init = box(-3, 3)
/// Expressions use + - * ^ with exact integer/rational/decimal literals;
/// implicit multiplication is not accepted.  The declared base is available
/// as `b` with integer or parenthesized rational exponents: b^2, b^(-1),
/// b^(1/2).
struct ProblemFile {
  std::vector<std::string> variables;
  Polynomial base;
  bool base_declared = false;
  std::vector<BExpr> drift;
  std::vector<std::vector<BExpr>> noise;
  std::vector<BExpr> control;
  std::optional<Polynomial> controller;
  std::optional<DensityCandidate> density;
  struct Synthesis {
    int deg_a = 0;
    int deg_c = 1;
    double lambda = 1.0;
    Rational gamma = Rational(1);
  };
  std::optional<Synthesis> synthesis;
  std::vector<Polynomial> constraints;
  SimConfig sim;
  bool sim_declared = false;

  std::size_t dim() const { return variables.size(); }
  SdeSystem make_system() const;
};

ProblemFile parse_problem(const std::string& text);
/// Canonical rendering; render-then-parse gives a structurally equal file.
std::string render_problem(const ProblemFile& p);

/// CLI entry point shared by the binary and the tests.  argv excludes the
/// program name.  Exit codes: 0 certified / feasible / simulation complete,
/// 1 not certified / infeasible, 2 input error, 3 numerical failure.
int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

/// 64-bit FNV-1a content digest, hex encoded.
std::string content_digest(const std::string& bytes);

}  // namespace agstab
