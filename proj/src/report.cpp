#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "agstab/cli.hpp"
#include "agstab/report.hpp"

namespace agstab {

using ordered_json = nlohmann::ordered_json;

std::string content_digest(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

namespace {

ordered_json condition_json(const ConditionReport& c) {
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
  return j;
}

ordered_json certificate_json(const SosCertificate& cert,
                              std::span<const std::string> names) {
  ordered_json j;
  ordered_json basis = ordered_json::array();
  for (const auto& m : cert.basis) basis.push_back(m.to_string(names));
  j["basis"] = std::move(basis);
  ordered_json gram = ordered_json::array();
  for (std::size_t i = 0; i < cert.gram.size(); ++i) {
    ordered_json row = ordered_json::array();
    for (std::size_t k = 0; k < cert.gram.size(); ++k)
      row.push_back(cert.gram(i, k));
    gram.push_back(std::move(row));
  }
  j["gram"] = std::move(gram);
  j["residual"] = cert.residual;
  j["min_eigenvalue"] = cert.min_eig;
  if (!cert.params.empty()) j["parameters"] = cert.params;
  ordered_json squares = ordered_json::array();
  for (const auto& [w, p] : cert.squares()) {
    ordered_json term;
    term["weight"] = w;
    term["polynomial"] = poly_to_string(p, names);
    squares.push_back(std::move(term));
  }
  j["squares"] = std::move(squares);
  if (!cert.mult_grams.empty()) {
    ordered_json mv = ordered_json::array();
    for (const auto& g : cert.mult_grams) {
      ordered_json gm = ordered_json::array();
      for (std::size_t i = 0; i < g.size(); ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t k = 0; k < g.size(); ++k) row.push_back(g(i, k));
        gm.push_back(std::move(row));
      }
      mv.push_back(std::move(gm));
    }
    j["multiplier_grams"] = std::move(mv);
  }
  return j;
}

}  // namespace

ordered_json certificate_result_json(const CertificateResult& res,
                                     std::span<const std::string> names) {
  ordered_json j;
  j["verdict"] = to_string(res.verdict);
  j["detail"] = res.detail;
  j["sdp_status"] = to_string(res.sdp_status);
  j["cleared_polynomial"] = poly_to_string(res.cleared_target, names);
  if (res.density) j["density"] = res.density_text(names);
  if (res.has_control) j["controller"] = res.control_text(names);
  j["certificate"] =
      res.certificate ? certificate_json(*res.certificate, names)
                      : ordered_json(nullptr);
  ordered_json conds = ordered_json::array();
  for (const auto& c : res.conditions) conds.push_back(condition_json(c));
  j["conditions"] = std::move(conds);
  return j;
}

ordered_json sim_report_json(const SimReport& rep) {
  ordered_json j;
  j["paths"] = rep.paths;
  j["seed"] = rep.seed;
  ordered_json counts;
  counts["converged"] = rep.converged;
  counts["escaped"] = rep.escaped;
  counts["undecided"] = rep.undecided;
  j["counts"] = std::move(counts);
  ordered_json fr;
  fr["converged"] = rep.frac_converged;
  fr["converged_ci95"] = {rep.ci_converged[0], rep.ci_converged[1]};
  fr["escaped"] = rep.frac_escaped;
  fr["escaped_ci95"] = {rep.ci_escaped[0], rep.ci_escaped[1]};
  fr["undecided"] = rep.frac_undecided;
  j["fractions"] = std::move(fr);
  ordered_json times;
  times["mean_escape"] = rep.mean_escape_time;
  times["min_escape"] = rep.min_escape_time;
  times["max_escape"] = rep.max_escape_time;
  j["times"] = std::move(times);
  j["mean_final_radius"] = rep.mean_final_radius;
  j["overflow_count"] = rep.overflow_count;
  if (rep.config.track_jacobian)
    j["det_nonpositive_steps"] = rep.det_nonpositive_total;
  ordered_json cfg;
  cfg["h"] = rep.config.step;
  cfg["T"] = rep.config.horizon;
  cfg["eps_conv"] = rep.config.eps_conv;
  cfg["dwell"] = rep.config.dwell_fraction;
  cfg["r_escape"] = rep.config.r_escape;
  cfg["exclude_radius"] = rep.config.exclude_radius;
  switch (rep.config.init) {
    case SimConfig::Init::Box:
      cfg["init"] = "box";
      cfg["box"] = {rep.config.box_lo, rep.config.box_hi};
      break;
    case SimConfig::Init::Sphere:
      cfg["init"] = "sphere";
      cfg["radius"] = rep.config.sphere_radius;
      break;
    case SimConfig::Init::Fixed:
      cfg["init"] = "points";
      cfg["count"] = rep.config.fixed_points.size();
      break;
  }
  j["config"] = std::move(cfg);
  return j;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace agstab
