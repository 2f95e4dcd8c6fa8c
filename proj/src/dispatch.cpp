#include <CLI11.hpp>

#include <fstream>
#include <sstream>

#include "agstab/cli.hpp"
#include "agstab/report.hpp"

namespace agstab {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

struct CommandContext {
  std::string file;
  std::string json_path;
  std::string sdpa_path;
  std::string csv_path;
  std::string mode = "stabilize";
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool strict = false;
  bool serial = false;
  double eps_pos = 0.0;
  std::string gammas = "";
  std::string deg_cs = "";
};

ordered_json report_header(const CommandContext& ctx, const std::string& cmd,
                           const std::string& source) {
  ordered_json j;
  j["schema"] = "agstab/report/v1";
  ordered_json tool;
  tool["name"] = "agstab";
  tool["version"] = kVersion;
  j["tool"] = std::move(tool);
  ordered_json input;
  input["path"] = ctx.file;
  input["digest"] = content_digest(source);
  j["input"] = std::move(input);
  j["command"] = cmd;
  return j;
}

void finalize_report(ordered_json& j, int exit_code,
                     const CommandContext& ctx) {
  j["exit_code"] = exit_code;
  if (!ctx.json_path.empty())
    write_text_atomic(ctx.json_path, j.dump(2) + "\n");
}

CertMode mode_from_string(const std::string& s) {
  if (s == "stabilize") return CertMode::Stabilize;
  if (s == "escape") return CertMode::Escape;
  if (s == "invariant-set") return CertMode::InvariantSet;
  throw std::invalid_argument("unknown mode: " + s);
}

int exit_code_for(const CertificateResult& res) {
  if (res.numerical_failure) return 3;
  return res.verdict == CertVerdict::Certified ? 0 : 1;
}

void maybe_write_sdpa(const CommandContext& ctx, const CertificateResult& res) {
  if (ctx.sdpa_path.empty() || !res.problem) return;
  write_text_atomic(ctx.sdpa_path, write_sdpa(res.problem->sdp));
}

int run_verify(const CommandContext& ctx, const std::string& source,
               const ProblemFile& pf, std::ostream& out) {
  ordered_json report = report_header(ctx, "verify", source);
  report["mode"] = ctx.mode;
  if (!pf.density) {
    report["error"] = "verify requires a density line";
    finalize_report(report, 2, ctx);
    out << "error: verify requires a density line\n";
    return 2;
  }
  VerifyOptions opts;
  opts.strict_side_conditions = ctx.strict;
  opts.eps_pos = ctx.eps_pos;
  SdeSystem sys = pf.make_system();
  CertMode mode = mode_from_string(ctx.mode);
  CertificateResult res =
      mode == CertMode::InvariantSet
          ? verify_on_invariant_set(sys, *pf.density, pf.constraints, opts)
          : verify_density(sys, *pf.density, mode, opts);
  maybe_write_sdpa(ctx, res);
  report["result"] = certificate_result_json(res, pf.variables);
  int code = exit_code_for(res);
  finalize_report(report, code, ctx);
  out << "verify: " << to_string(res.verdict) << " (" << res.detail << ")\n";
  return code;
}

int run_synthesize(const CommandContext& ctx, const std::string& source,
                   const ProblemFile& pf, std::ostream& out) {
  ordered_json report = report_header(ctx, "synthesize", source);
  if (!pf.synthesis || pf.control.empty()) {
    report["error"] = "synthesize requires synthesis and control lines";
    finalize_report(report, 2, ctx);
    out << "error: synthesize requires synthesis and control lines\n";
    return 2;
  }
  SynthesisSpec spec;
  spec.b = pf.base;
  spec.gamma = pf.synthesis->gamma;
  spec.deg_a = pf.synthesis->deg_a;
  spec.deg_c = pf.synthesis->deg_c;
  spec.lambda = pf.synthesis->lambda;
  VerifyOptions opts;
  opts.strict_side_conditions = ctx.strict;
  opts.eps_pos = ctx.eps_pos;
  ControlledSdeSystem csys(pf.make_system(), pf.control);
  CertificateResult res = synthesize_controller(csys, spec, opts);
  maybe_write_sdpa(ctx, res);
  report["result"] = certificate_result_json(res, pf.variables);
  int code = exit_code_for(res);
  finalize_report(report, code, ctx);
  out << "synthesize: " << to_string(res.verdict);
  if (res.has_control) out << ", u = " << res.control_text(pf.variables, 2);
  out << "\n";
  return code;
}

int run_simulate(const CommandContext& ctx, const std::string& source,
                 const ProblemFile& pf, std::ostream& out) {
  ordered_json report = report_header(ctx, "simulate", source);
  report["mode"] = ctx.mode;
  SimConfig cfg = pf.sim;
  if (ctx.seed_set) cfg.seed = ctx.seed;
  SdeSystem sys = pf.make_system();
  SimReport rep;
  bool closed_loop = pf.controller && !pf.control.empty();
  if (closed_loop) {
    ControlLaw u{CompiledPoly(*pf.controller),
                 CompiledPoly(FPolynomial::constant(pf.dim(), 1.0))};
    ControlledSdeSystem csys(sys, pf.control);
    rep = simulate_controlled(csys, u, cfg, !ctx.serial);
  } else {
    rep = run_mc(sys, cfg, !ctx.serial);
  }
  report["closed_loop"] = closed_loop;
  report["simulation"] = sim_report_json(rep);

  if (!ctx.csv_path.empty()) {
    std::ostringstream csv;
    csv << "path,step,t";
    for (const auto& v : pf.variables) csv << "," << v;
    if (cfg.track_jacobian) csv << ",logdetJ";
    csv << "\n";
    CompiledSystem compiled(sys);
    const std::size_t dim = sys.dim();
    // Symbolic field Jacobians for the variational factor, when tracked.
    std::vector<std::vector<CompiledBExpr>> ddrift;
    std::vector<std::vector<std::vector<CompiledBExpr>>> dnoise;
    if (cfg.track_jacobian) {
      for (const auto& e : sys.drift()) {
        std::vector<CompiledBExpr> row;
        for (std::size_t j = 0; j < dim; ++j) row.emplace_back(e.derivative(j));
        ddrift.push_back(std::move(row));
      }
      for (const auto& col : sys.noise()) {
        std::vector<std::vector<CompiledBExpr>> mat;
        for (const auto& e : col) {
          std::vector<CompiledBExpr> row;
          for (std::size_t j = 0; j < dim; ++j)
            row.emplace_back(e.derivative(j));
          mat.push_back(std::move(row));
        }
        dnoise.push_back(std::move(mat));
      }
    }
    std::optional<ControlLaw> u;
    std::optional<CompiledSystem> channel;
    if (closed_loop) {
      u = ControlLaw{CompiledPoly(*pf.controller),
                     CompiledPoly(FPolynomial::constant(pf.dim(), 1.0))};
      channel.emplace(SdeSystem(pf.control, {}, false));
    }
    const long steps = std::lround(cfg.horizon / cfg.step);
    for (int path = 0; path < cfg.paths; ++path) {
      GaussianStream g(cfg.seed ^ static_cast<std::uint64_t>(path));
      std::vector<double> x(dim, 0.0);
      // Initial draw mirrors the runner so the CSV matches the report.
      if (cfg.init == SimConfig::Init::Fixed) {
        x = cfg.fixed_points[path % cfg.fixed_points.size()];
      } else if (cfg.init == SimConfig::Init::Box) {
        for (int tries = 0; tries < 10000; ++tries) {
          double r2 = 0;
          for (auto& v : x) {
            v = cfg.box_lo + (cfg.box_hi - cfg.box_lo) * g.next_uniform();
            r2 += v * v;
          }
          double r = std::sqrt(r2);
          if (r > 0 && r >= cfg.exclude_radius) break;
        }
      } else {
        for (int tries = 0; tries < 10000; ++tries) {
          double r2 = 0;
          for (auto& v : x) {
            v = g.next();
            r2 += v * v;
          }
          double r = std::sqrt(r2);
          if (r > 0) {
            for (auto& v : x) v = v * cfg.sphere_radius / r;
            if (cfg.sphere_radius >= cfg.exclude_radius) break;
          }
        }
      }
      std::vector<double> gauss(std::max<std::size_t>(1, sys.num_noise()));
      std::vector<double> scratch(2 * dim), chan(dim);
      Mat J = Mat::identity(dim), D(dim);
      double logdet = 0.0;
      auto emit = [&](long s) {
        csv << path << "," << s << "," << s * cfg.step;
        for (double v : x) csv << "," << v;
        if (cfg.track_jacobian) csv << "," << logdet;
        csv << "\n";
      };
      emit(0);
      for (long s = 1; s <= steps; ++s) {
        for (std::size_t k = 0; k < sys.num_noise(); ++k) gauss[k] = g.next();
        if (cfg.track_jacobian) {
          const double sqh = std::sqrt(cfg.step);
          for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) {
              double v = (i == j ? 1.0 : 0.0) + cfg.step * ddrift[i][j].eval(x);
              for (std::size_t k = 0; k < sys.num_noise(); ++k)
                v += sqh * gauss[k] * dnoise[k][i][j].eval(x);
              D(i, j) = v;
            }
          J = D * J;
          double det = lu_det(J);
          logdet = det > 0 ? std::log(det)
                           : std::numeric_limits<double>::quiet_NaN();
        }
        bool finite = true;
        if (u) {
          compiled.drift(x, std::span<double>(scratch).subspan(0, dim));
          double uval = u->eval(x);
          channel->drift(x, chan);
          for (std::size_t i = 0; i < dim; ++i)
            scratch[dim + i] = x[i] + cfg.step * (scratch[i] + uval * chan[i]);
          const double sqrt_h = std::sqrt(cfg.step);
          for (std::size_t k = 0; k < sys.num_noise(); ++k) {
            compiled.noise(k, x, std::span<double>(scratch).subspan(0, dim));
            for (std::size_t i = 0; i < dim; ++i)
              scratch[dim + i] += sqrt_h * gauss[k] * scratch[i];
          }
          for (std::size_t i = 0; i < dim; ++i) {
            x[i] = scratch[dim + i];
            finite = finite && std::isfinite(x[i]);
          }
        } else {
          finite = step_em(compiled, x, cfg.step, gauss, scratch);
        }
        emit(s);
        double r2 = 0;
        for (double v : x) r2 += v * v;
        if (!finite || std::sqrt(r2) >= cfg.r_escape) break;
      }
    }
    write_text_atomic(ctx.csv_path, csv.str());
  }

  finalize_report(report, 0, ctx);
  out << "simulate: " << rep.converged << " converged, " << rep.escaped
      << " escaped, " << rep.undecided << " undecided of " << rep.paths
      << " paths\n";
  return 0;
}

int run_check(const CommandContext& ctx, const std::string& source,
              const ProblemFile& pf, std::ostream& out) {
  ordered_json report = report_header(ctx, "check", source);
  SdeSystem sys = pf.make_system();
  ordered_json conds = ordered_json::array();
  auto push = [&](const ConditionReport& c) {
    ordered_json j;
    j["name"] = c.name;
    j["verdict"] = to_string(c.verdict);
    ordered_json lines = ordered_json::array();
    for (const auto& d : c.details) {
      ordered_json l;
      l["condition"] = d.condition;
      l["value"] = d.value;
      if (!d.outcome.empty()) l["outcome"] = d.outcome;
      lines.push_back(std::move(l));
    }
    j["details"] = std::move(lines);
    conds.push_back(std::move(j));
  };

  push(check_lipschitz(sys));
  bool poly = true;
  for (const auto& e : sys.drift()) poly = poly && e.is_polynomial();
  for (const auto& col : sys.noise())
    for (const auto& e : col) poly = poly && e.is_polynomial();
  if (poly)
    for (int p = 1; p <= 3; ++p) push(check_growth(sys, p));
  if (pf.density) {
    try {
      push(check_integrability(*pf.density, std::nullopt));
      push(check_integrability(*pf.density, 1));
    } catch (const BaseVanishesOffOrigin& e) {
      ConditionReport bad;
      bad.name = "integrability(D)";
      bad.verdict = Verdict::Fails;
      bad.details.push_back({"base positivity", "vanishes off origin", e.what()});
      push(bad);
    }
  }
  {
    auto pos = positivity_on_sphere(pf.base);
    ConditionReport c;
    c.name = "base_positive_on_sphere";
    switch (pos.kind) {
      case SpherePositivity::Kind::Positive: c.verdict = Verdict::Holds; break;
      case SpherePositivity::Kind::FoundZero: c.verdict = Verdict::Fails; break;
      case SpherePositivity::Kind::Unknown:
        c.verdict = Verdict::Inconclusive;
        break;
    }
    c.details.push_back({"sampled minimum", std::to_string(pos.min_sampled),
                         pos.certified ? "sos-certified" : ""});
    push(c);
  }
  report["conditions"] = std::move(conds);
  finalize_report(report, 0, ctx);
  out << "check: complete\n";
  return 0;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int run_sweep(const CommandContext& ctx, const std::string& source,
              const ProblemFile& pf, std::ostream& out) {
  ordered_json report = report_header(ctx, "sweep", source);
  if (!pf.synthesis || pf.control.empty()) {
    report["error"] = "sweep requires synthesis and control lines";
    finalize_report(report, 2, ctx);
    out << "error: sweep requires synthesis and control lines\n";
    return 2;
  }
  std::vector<Rational> gammas;
  for (const auto& s : split_list(ctx.gammas.empty() ? pf.synthesis->gamma.to_string()
                                                     : ctx.gammas))
    gammas.push_back(Rational::from_string(s));
  std::vector<int> degs;
  if (ctx.deg_cs.empty()) {
    degs.push_back(pf.synthesis->deg_c);
  } else {
    for (const auto& s : split_list(ctx.deg_cs)) degs.push_back(std::stoi(s));
  }

  ordered_json table = ordered_json::array();
  bool any = false;
  ControlledSdeSystem csys(pf.make_system(), pf.control);
  for (const auto& gamma : gammas)
    for (int deg_c : degs) {
      SynthesisSpec spec;
      spec.b = pf.base;
      spec.gamma = gamma;
      spec.deg_a = pf.synthesis->deg_a;
      spec.deg_c = deg_c;
      spec.lambda = pf.synthesis->lambda;
      ordered_json row;
      row["gamma"] = gamma.to_string();
      row["deg_c"] = deg_c;
      try {
        VerifyOptions opts;
        opts.strict_side_conditions = ctx.strict;
        CertificateResult res = synthesize_controller(csys, spec, opts);
        row["verdict"] = to_string(res.verdict);
        row["sdp_status"] = to_string(res.sdp_status);
        if (res.has_control && res.verdict == CertVerdict::Certified) {
          row["controller"] = res.control_text(pf.variables);
          any = true;
        }
      } catch (const std::exception& e) {
        row["verdict"] = "error";
        row["error"] = e.what();
      }
      table.push_back(std::move(row));
      out << "sweep: gamma = " << gamma.to_string() << ", deg_c = " << deg_c
          << " -> " << table.back()["verdict"].get<std::string>() << "\n";
    }
  report["table"] = std::move(table);
  int code = any ? 0 : 1;
  finalize_report(report, code, ctx);
  return code;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"density certificates and controller synthesis for polynomial diffusions"};
  app.name("agstab");
  CommandContext ctx;

  auto add_common = [&](CLI::App* sub, bool with_mode) {
    sub->add_option("file", ctx.file, "problem description file")->required();
    sub->add_option("--json", ctx.json_path, "write a JSON report here");
    if (with_mode)
      sub->add_option("--mode", ctx.mode, "stabilize | escape | invariant-set")
          ->check(CLI::IsMember({"stabilize", "escape", "invariant-set"}));
    sub->add_flag("--strict-side-conditions", ctx.strict,
                  "marginal side conditions block certification");
    sub->add_option("--eps-pos", ctx.eps_pos,
                    "strict-positivity margin subtracted before the SOS check");
  };

  auto* verify = app.add_subcommand("verify", "check a density certificate");
  add_common(verify, true);
  verify->add_option("--sdpa-out", ctx.sdpa_path, "export the SDP in sparse SDPA form");

  auto* synth = app.add_subcommand("synthesize", "search for a stabilizing controller");
  add_common(synth, false);
  synth->add_option("--sdpa-out", ctx.sdpa_path, "export the SDP in sparse SDPA form");

  auto* sim = app.add_subcommand("simulate", "integrate trajectories and classify");
  add_common(sim, true);
  sim->add_option("--seed", ctx.seed, "override the RNG seed")
      ->each([&](const std::string&) { ctx.seed_set = true; });
  sim->add_option("--csv", ctx.csv_path, "dump per-path trajectories as CSV");
  sim->add_flag("--serial", ctx.serial, "disable the parallel path loop");

  auto* check = app.add_subcommand("check", "run the side-condition checkers only");
  add_common(check, false);

  auto* sweep = app.add_subcommand("sweep", "tabulate synthesis feasibility over a grid");
  add_common(sweep, false);
  sweep->add_option("--gammas", ctx.gammas, "comma-separated gamma values (rationals)");
  sweep->add_option("--deg-cs", ctx.deg_cs, "comma-separated controller degrees");

  app.require_subcommand(1);

  std::vector<const char*> argv;
  argv.push_back("agstab");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  std::string source;
  {
    std::ifstream in(ctx.file, std::ios::binary);
    if (!in) {
      err << "error: cannot open " << ctx.file << "\n";
      return 2;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    source = ss.str();
  }

  // A requested report is written even on failure, never as a partial file.
  auto error_report = [&](const std::string& cmd, const std::string& message,
                          int code) {
    err << (code == 3 ? "numerical failure: " : "error: ") << message << "\n";
    if (!ctx.json_path.empty()) {
      ordered_json j = report_header(ctx, cmd, source);
      j["error"] = message;
      finalize_report(j, code, ctx);
    }
    return code;
  };
  std::string cmd = verify->parsed() ? "verify"
                    : synth->parsed() ? "synthesize"
                    : sim->parsed()   ? "simulate"
                    : check->parsed() ? "check"
                                      : "sweep";
  try {
    ProblemFile pf = parse_problem(source);
    if (verify->parsed()) return run_verify(ctx, source, pf, out);
    if (synth->parsed()) return run_synthesize(ctx, source, pf, out);
    if (sim->parsed()) return run_simulate(ctx, source, pf, out);
    if (check->parsed()) return run_check(ctx, source, pf, out);
    if (sweep->parsed()) return run_sweep(ctx, source, pf, out);
  } catch (const ParseError& e) {
    return error_report(cmd, e.what(), 2);
  } catch (const SdpaParseError& e) {
    return error_report(cmd, e.what(), 2);
  } catch (const NonIntegerGap& e) {
    return error_report(cmd, e.what(), 2);
  } catch (const std::invalid_argument& e) {
    return error_report(cmd, e.what(), 2);
  } catch (const std::domain_error& e) {
    return error_report(cmd, e.what(), 2);
  } catch (const std::exception& e) {
    return error_report(cmd, e.what(), 3);
  }
  return 2;
}

}  // namespace agstab
