#include "agstab/mc.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace agstab {

namespace {
constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}
}  // namespace

std::array<std::uint32_t, 4> PhiloxStream::block(std::uint64_t ctr) const {
  std::array<std::uint32_t, 4> x{static_cast<std::uint32_t>(ctr),
                                 static_cast<std::uint32_t>(ctr >> 32), 0u, 0u};
  std::uint32_t k0 = k0_, k1 = k1_;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, x[0], hi0, lo0);
    mulhilo(kPhiloxM1, x[2], hi1, lo1);
    x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return x;
}

std::uint64_t PhiloxStream::next_u64() {
  if (buf_pos_ >= 2) {
    buf_ = block(counter_++);
    buf_pos_ = 0;
  }
  std::uint64_t hi = buf_[2 * buf_pos_];
  std::uint64_t lo = buf_[2 * buf_pos_ + 1];
  ++buf_pos_;
  return (hi << 32) | lo;
}

double GaussianStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0,1] so the log is finite.
  double u1 = static_cast<double>((u_.next_u64() >> 11) + 1) * 0x1.0p-53;
  double u2 = u_.next_uniform();
  double rad = std::sqrt(-2.0 * std::log(u1));
  double ang = 2.0 * M_PI * u2;
  spare_ = rad * std::sin(ang);
  has_spare_ = true;
  return rad * std::cos(ang);
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::Converged: return "converged";
    case Outcome::Escaped: return "escaped";
    case Outcome::Undecided: return "undecided";
  }
  return "?";
}

void SimConfig::validate(std::size_t dim) const {
  if (step <= 0) throw std::invalid_argument("sim: step must be positive");
  if (horizon < step) throw std::invalid_argument("sim: horizon < step");
  if (paths < 1) throw std::invalid_argument("sim: need at least one path");
  if (!(eps_conv < r_escape))
    throw std::invalid_argument("sim: eps_conv must be below r_escape");
  if (dwell_fraction <= 0 || dwell_fraction > 1)
    throw std::invalid_argument("sim: dwell fraction in (0, 1]");
  if (init == Init::Fixed) {
    if (fixed_points.empty())
      throw std::invalid_argument("sim: fixed initial list is empty");
    for (const auto& p : fixed_points)
      if (p.size() != dim)
        throw std::invalid_argument("sim: fixed initial point dimension");
  }
  if (init == Init::Box && !(box_lo < box_hi))
    throw std::invalid_argument("sim: box bounds");
}

CompiledSystem::CompiledSystem(const SdeSystem& sys) : dim_(sys.dim()) {
  for (const auto& e : sys.drift()) drift_.emplace_back(e);
  for (const auto& col : sys.noise()) {
    std::vector<CompiledBExpr> c;
    for (const auto& e : col) c.emplace_back(e);
    noise_.push_back(std::move(c));
  }
}

void CompiledSystem::drift(std::span<const double> x,
                           std::span<double> out) const {
  for (std::size_t i = 0; i < dim_; ++i) out[i] = drift_[i].eval(x);
}

void CompiledSystem::noise(std::size_t k, std::span<const double> x,
                           std::span<double> out) const {
  for (std::size_t i = 0; i < dim_; ++i) out[i] = noise_[k][i].eval(x);
}

bool step_em(const CompiledSystem& sys, std::span<double> state, double h,
             std::span<const double> gaussians, std::span<double> scratch) {
  const std::size_t n = sys.dim();
  const double sqrt_h = std::sqrt(h);
  sys.drift(state, scratch.subspan(0, n));
  for (std::size_t i = 0; i < n; ++i) scratch[n + i] = state[i] + h * scratch[i];
  for (std::size_t k = 0; k < sys.num_noise(); ++k) {
    sys.noise(k, state, scratch.subspan(0, n));
    for (std::size_t i = 0; i < n; ++i)
      scratch[n + i] += sqrt_h * gaussians[k] * scratch[i];
  }
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i) {
    state[i] = scratch[n + i];
    finite = finite && std::isfinite(state[i]);
  }
  return finite;
}

namespace {

double norm2(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

std::vector<double> draw_initial(const SimConfig& cfg, std::size_t dim,
                                 int path, GaussianStream& g) {
  std::vector<double> x(dim, 0.0);
  switch (cfg.init) {
    case SimConfig::Init::Fixed:
      return cfg.fixed_points[static_cast<std::size_t>(path) %
                              cfg.fixed_points.size()];
    case SimConfig::Init::Box:
      for (int tries = 0; tries < 10000; ++tries) {
        for (auto& v : x)
          v = cfg.box_lo + (cfg.box_hi - cfg.box_lo) * g.next_uniform();
        double r = norm2(x);
        if (r > 0 && r >= cfg.exclude_radius) return x;
      }
      return x;
    case SimConfig::Init::Sphere:
      for (int tries = 0; tries < 10000; ++tries) {
        for (auto& v : x) v = g.next();
        double r = norm2(x);
        if (r > 0) {
          for (auto& v : x) v = v * cfg.sphere_radius / r;
          if (norm2(x) >= cfg.exclude_radius) return x;
        }
      }
      return x;
  }
  return x;
}

// Optional control closure applied on top of the plant drift.
struct Closure {
  const ControlLaw* u = nullptr;
  const CompiledSystem* channel = nullptr;  // channel components as drift
};

PathResult run_path(const CompiledSystem& sys, const Closure& closure,
                    const SimConfig& cfg, int path) {
  const std::size_t n = sys.dim();
  GaussianStream g(cfg.seed ^ static_cast<std::uint64_t>(path));
  std::vector<double> x = draw_initial(cfg, n, path, g);
  std::vector<double> scratch(2 * n), gauss(std::max<std::size_t>(1, sys.num_noise()));
  std::vector<double> chan(n);

  const long steps = std::lround(cfg.horizon / cfg.step);
  const long window_start =
      steps - std::max<long>(1, std::lround(cfg.dwell_fraction * steps)) + 1;
  PathResult res;
  bool in_window_ok = true;
  const double sqrt_h = std::sqrt(cfg.step);

  for (long s = 1; s <= steps; ++s) {
    for (std::size_t k = 0; k < sys.num_noise(); ++k) gauss[k] = g.next();
    bool finite;
    if (closure.u) {
      // Closed loop: x += (X0 + u * channel) h + noise.
      sys.drift(x, std::span<double>(scratch).subspan(0, n));
      double uval = closure.u->eval(x);
      closure.channel->drift(x, chan);
      for (std::size_t i = 0; i < n; ++i)
        scratch[n + i] = x[i] + cfg.step * (scratch[i] + uval * chan[i]);
      for (std::size_t k = 0; k < sys.num_noise(); ++k) {
        sys.noise(k, x, std::span<double>(scratch).subspan(0, n));
        for (std::size_t i = 0; i < n; ++i)
          scratch[n + i] += sqrt_h * gauss[k] * scratch[i];
      }
      finite = true;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = scratch[n + i];
        finite = finite && std::isfinite(x[i]);
      }
    } else {
      finite = step_em(sys, x, cfg.step, gauss, scratch);
    }
    double r = finite ? norm2(x) : std::numeric_limits<double>::infinity();
    if (!finite || r >= cfg.r_escape) {
      res.outcome = Outcome::Escaped;
      res.exit_time = static_cast<double>(s) * cfg.step;
      res.overflow = !finite;
      return res;
    }
    if (s >= window_start && r > cfg.eps_conv) in_window_ok = false;
  }
  res.final_radius = norm2(x);
  res.outcome = in_window_ok ? Outcome::Converged : Outcome::Undecided;
  return res;
}

SimReport aggregate(std::vector<PathResult> results, const SimConfig& cfg) {
  SimReport rep;
  rep.paths = cfg.paths;
  rep.seed = cfg.seed;
  rep.config = cfg;
  double escape_sum = 0;
  rep.min_escape_time = 1e300;
  double radius_sum = 0;
  int radius_count = 0;
  for (const auto& r : results) {
    switch (r.outcome) {
      case Outcome::Converged: ++rep.converged; break;
      case Outcome::Escaped: ++rep.escaped; break;
      case Outcome::Undecided: ++rep.undecided; break;
    }
    if (r.outcome == Outcome::Escaped) {
      escape_sum += r.exit_time;
      rep.min_escape_time = std::min(rep.min_escape_time, r.exit_time);
      rep.max_escape_time = std::max(rep.max_escape_time, r.exit_time);
    } else {
      radius_sum += r.final_radius;
      ++radius_count;
    }
    if (r.overflow) ++rep.overflow_count;
    rep.det_nonpositive_total += r.det_nonpositive_steps;
  }
  if (rep.escaped == 0) rep.min_escape_time = 0;
  const double n = static_cast<double>(rep.paths);
  rep.frac_converged = rep.converged / n;
  rep.frac_escaped = rep.escaped / n;
  rep.frac_undecided = rep.undecided / n;
  auto ci = [&](double p, double* out) {
    double half = 1.96 * std::sqrt(p * (1 - p) / n);
    out[0] = std::max(0.0, p - half);
    out[1] = std::min(1.0, p + half);
  };
  ci(rep.frac_converged, rep.ci_converged);
  ci(rep.frac_escaped, rep.ci_escaped);
  rep.mean_escape_time = rep.escaped ? escape_sum / rep.escaped : 0.0;
  rep.mean_final_radius = radius_count ? radius_sum / radius_count : 0.0;
  rep.per_path = std::move(results);
  return rep;
}

SimReport run_paths(const CompiledSystem& compiled, const Closure& closure,
                    const SimConfig& cfg, bool parallel) {
  std::vector<PathResult> results(cfg.paths);
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (int i = 0; i < cfg.paths; ++i)
      results[i] = run_path(compiled, closure, cfg, i);
  } else {
    for (int i = 0; i < cfg.paths; ++i)
      results[i] = run_path(compiled, closure, cfg, i);
  }
  return aggregate(std::move(results), cfg);
}

}  // namespace

SimReport run_mc(const SdeSystem& sys, const SimConfig& cfg, bool parallel) {
  cfg.validate(sys.dim());
  CompiledSystem compiled(sys);
  return run_paths(compiled, {}, cfg, parallel);
}

SimReport run_mc_serial(const SdeSystem& sys, const SimConfig& cfg) {
  return run_mc(sys, cfg, false);
}

SimReport simulate_controlled(const ControlledSdeSystem& sys,
                              const ControlLaw& u, const SimConfig& cfg,
                              bool parallel) {
  cfg.validate(sys.plant.dim());
  CompiledSystem compiled(sys.plant);
  // Channel components lowered through a drift-only view.
  SdeSystem channel_view(sys.control_channel, {}, false);
  CompiledSystem channel(channel_view);
  Closure closure{&u, &channel};
  return run_paths(compiled, closure, cfg, parallel);
}

std::vector<JacobianPath> run_jacobian(const SdeSystem& sys,
                                       const SimConfig& cfg) {
  cfg.validate(sys.dim());
  const std::size_t n = sys.dim();
  CompiledSystem compiled(sys);
  // Symbolic Jacobians of the fields, compiled once.
  std::vector<std::vector<CompiledBExpr>> ddrift;  // [i][j] = d X0_i / d x_j
  for (const auto& e : sys.drift()) {
    std::vector<CompiledBExpr> row;
    for (std::size_t j = 0; j < n; ++j) row.emplace_back(e.derivative(j));
    ddrift.push_back(std::move(row));
  }
  std::vector<std::vector<std::vector<CompiledBExpr>>> dnoise;
  for (const auto& col : sys.noise()) {
    std::vector<std::vector<CompiledBExpr>> mat;
    for (const auto& e : col) {
      std::vector<CompiledBExpr> row;
      for (std::size_t j = 0; j < n; ++j) row.emplace_back(e.derivative(j));
      mat.push_back(std::move(row));
    }
    dnoise.push_back(std::move(mat));
  }

  const long steps = std::lround(cfg.horizon / cfg.step);
  const double sqrt_h = std::sqrt(cfg.step);
  std::vector<JacobianPath> out(cfg.paths);

#pragma omp parallel for schedule(dynamic)
  for (int path = 0; path < cfg.paths; ++path) {
    GaussianStream g(cfg.seed ^ static_cast<std::uint64_t>(path));
    std::vector<double> x = draw_initial(cfg, n, path, g);
    std::vector<double> gauss(std::max<std::size_t>(1, sys.num_noise()));
    std::vector<double> scratch(2 * n);
    Mat J = Mat::identity(n);
    Mat D(n), acc(n);
    JacobianPath& res = out[path];
    res.min_logdet = 1e300;
    res.logdet.reserve(steps);
    for (long s = 1; s <= steps; ++s) {
      for (std::size_t k = 0; k < sys.num_noise(); ++k) gauss[k] = g.next();
      // Variational factor M = I + h DX0 + sqrt(h) sum xi_k DXk at x_s.
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          double v = (i == j ? 1.0 : 0.0) + cfg.step * ddrift[i][j].eval(x);
          for (std::size_t k = 0; k < sys.num_noise(); ++k)
            v += sqrt_h * gauss[k] * dnoise[k][i][j].eval(x);
          D(i, j) = v;
        }
      J = D * J;
      bool finite = step_em(compiled, x, cfg.step, gauss, scratch);
      double det = lu_det(J);
      if (det > 0) {
        double ld = std::log(det);
        res.logdet.push_back(ld);
        res.min_logdet = std::min(res.min_logdet, ld);
      } else {
        ++res.det_nonpositive_steps;
      }
      double r = finite ? norm2(x) : std::numeric_limits<double>::infinity();
      if (!finite || r >= cfg.r_escape) {
        res.outcome = Outcome::Escaped;
        break;
      }
    }
    if (res.min_logdet == 1e300) res.min_logdet = 0;
  }
  return out;
}

}  // namespace agstab
