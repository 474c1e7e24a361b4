#include "lvlab/sde_engine.hpp"

#include <algorithm>
#include <cmath>

#include "lvlab/errors.hpp"
#include "lvlab/stable_measure.hpp"

namespace lvlab {

std::string to_string(SmallJumpMode m) { return m == SmallJumpMode::drop ? "drop" : "gaussian"; }
std::string to_string(CutoffMode m) { return m == CutoffMode::absolute ? "absolute" : "relative"; }

std::string to_string(StopEvent e) {
  switch (e) {
    case StopEvent::ExtinctX:
      return "ExtinctX";
    case StopEvent::ExtinctY:
      return "ExtinctY";
    case StopEvent::ExtinctBoth:
      return "ExtinctBoth";
    case StopEvent::Explode:
      return "Explode";
    case StopEvent::HorizonEnd:
      return "HorizonEnd";
  }
  return "?";
}

void SimConfig::check(const ModelParams& p) const {
  if (!(dt > 0)) throw ConfigError("dt must be positive");
  if (!(jump_cutoff > 0)) throw ConfigError("jump_cutoff must be positive");
  if (!(eps_ext > 0)) throw ConfigError("eps_ext must be positive");
  if (!(eps_ext < std::min(p.x0, p.y0))) throw ConfigError("eps_ext must be below min(x0, y0)");
  if (probe_eps != 0 && !(probe_eps > eps_ext && probe_eps < std::min(p.x0, p.y0))) {
    throw ConfigError("probe_eps must lie between eps_ext and min(x0, y0)");
  }
  if (!(n_max > std::max(p.x0, p.y0))) throw ConfigError("n_max must exceed max(x0, y0)");
  if (!(horizon > 0)) throw ConfigError("horizon must be positive");
  if (checkpoint_dt < 0) throw ConfigError("checkpoint_dt must be nonnegative");
  if (!(max_jump_mean > 0)) throw ConfigError("max_jump_mean must be positive");
  if (max_relative_move < 0) throw ConfigError("max_relative_move must be nonnegative");
  if (!(min_dt > 0 && min_dt <= dt)) throw ConfigError("min_dt must lie in (0, dt]");
}

double jump_level_x(const ModelParams& p, double x) {
  return p.a3 > 0 && x > 0 ? p.a3 * std::pow(x, p.p3 + p.alpha1) : 0.0;
}
double jump_level_y(const ModelParams& p, double y) {
  return p.b3 > 0 && y > 0 ? p.b3 * std::pow(y, p.q3 + p.alpha2) : 0.0;
}

double exact_jump_rate(double level, double alpha, double cutoff) {
  if (level <= 0) return 0;
  // level * c delta^-alpha / alpha
  return level * stable_normalization(alpha) * std::pow(cutoff, -alpha) / alpha;
}

double effective_cutoff(const SimConfig& cfg, double state) {
  return cfg.cutoff_mode == CutoffMode::absolute ? cfg.jump_cutoff : cfg.jump_cutoff * state;
}

namespace {

struct Axis1 {
  double drift_coef, drift_pow;   // a1, p1 + 1
  double diff_coef, diff_pow;     // 2 a2, p2 + 2
  double jump_coef, jump_pow;     // a3, p3 + alpha
  double eta, self_pow, cross_pow;
  double alpha, c_alpha;
};

Axis1 axis_x(const ModelParams& p) {
  return {p.a1, p.p1 + 1, 2 * p.a2, p.p2 + 2, p.a3, p.p3 + p.alpha1, p.eta1, p.theta1, p.kappa1,
          p.alpha1, stable_normalization(p.alpha1)};
}
Axis1 axis_y(const ModelParams& p) {
  return {p.b1, p.q1 + 1, 2 * p.b2, p.q2 + 2, p.b3, p.q3 + p.alpha2, p.eta2, p.theta2, p.kappa2,
          p.alpha2, stable_normalization(p.alpha2)};
}

struct LocalRates {
  double drift = 0;      // including the compensator of exact jumps
  double variance = 0;   // per unit time, diffusion plus Gaussian small jumps
  double level = 0;      // jump intensity level
  double cutoff = 0;
};

LocalRates local_rates(const Axis1& a, const SimConfig& cfg, double s, double other) {
  LocalRates r;
  if (s <= 0) return r;
  if (a.drift_coef != 0) r.drift -= a.drift_coef * std::pow(s, a.drift_pow);
  if (a.eta != 0 && other > 0) r.drift -= a.eta * std::pow(s, a.self_pow) * std::pow(other, a.cross_pow);
  if (a.diff_coef != 0) r.variance += a.diff_coef * std::pow(s, a.diff_pow);
  if (a.jump_coef != 0) {
    r.level = a.jump_coef * std::pow(s, a.jump_pow);
    r.cutoff = effective_cutoff(cfg, s);
    // Compensator of the exact jumps: level * int_{z>d} z mu(dz)
    r.drift -= r.level * a.c_alpha * std::pow(r.cutoff, 1 - a.alpha) / (a.alpha - 1);
    if (cfg.small_jump_mode == SmallJumpMode::gaussian) {
      r.variance += r.level * a.c_alpha * std::pow(r.cutoff, 2 - a.alpha) / (2 - a.alpha);
    }
  }
  return r;
}

// Returns the unclamped next value.
double advance(const Axis1& a, const SimConfig& cfg, double s, double other, double dt, double dB, double small,
               double level_bound, const std::vector<std::pair<double, double>>& jumps) {
  if (s <= 0) return 0;
  const LocalRates r = local_rates(a, cfg, s, other);
  double next = s + r.drift * dt;
  double diff_var = a.diff_coef != 0 ? a.diff_coef * std::pow(s, a.diff_pow) : 0.0;
  if (diff_var > 0) next += std::sqrt(diff_var) * dB;
  if (r.variance > diff_var) next += std::sqrt((r.variance - diff_var) * dt) * small;
  for (const auto& [mark, size] : jumps) {
    if (mark * level_bound <= r.level) next += size * (cfg.cutoff_mode == CutoffMode::relative ? s : 1.0);
  }
  return next;
}

// Largest step keeping the drift move and the noise standard deviation within a fraction
// of the current state.
double positivity_step(const Axis1& a, const SimConfig& cfg, double s, double other) {
  if (!(cfg.max_relative_move > 0) || s <= 0) return std::numeric_limits<double>::infinity();
  const LocalRates r = local_rates(a, cfg, s, other);
  const double k = cfg.max_relative_move;
  double h = std::numeric_limits<double>::infinity();
  if (r.drift != 0) h = std::min(h, k * s / std::abs(r.drift));
  if (r.variance > 0) h = std::min(h, k * k * s * s / r.variance);
  return h;
}

}  // namespace

void euler_step(const ModelParams& p, const SimConfig& cfg, double& x, double& y, double dt, const StepDraws& d,
                StepInfo* info) {
  const double nx = advance(axis_x(p), cfg, x, y, dt, d.dB1, d.small1, d.level_bound1, d.jumps1);
  const double ny = advance(axis_y(p), cfg, y, x, dt, d.dB2, d.small2, d.level_bound2, d.jumps2);
  if (info) {
    info->clamp_x = nx < 0 ? -nx : 0;
    info->clamp_y = ny < 0 ? -ny : 0;
  }
  x = std::max(nx, 0.0);
  y = std::max(ny, 0.0);
}

namespace {

// Draws the random input of one step for dominating jump levels (lx, ly). Jump sizes
// are in units of the cutoff when the cutoff is relative.
void draw_step(RandomStream& rng, const SimConfig& cfg, const ModelParams& p, double dt, double lx, double ly,
               double cut_x, double cut_y, StepDraws& d) {
  d.dB1 = std::sqrt(dt) * rng.normal();
  d.dB2 = std::sqrt(dt) * rng.normal();
  d.small1 = rng.normal();
  d.small2 = rng.normal();
  d.level_bound1 = lx;
  d.level_bound2 = ly;
  d.jumps1.clear();
  d.jumps2.clear();
  const StableMeasure m1{p.alpha1, stable_normalization(p.alpha1)};
  const StableMeasure m2{p.alpha2, stable_normalization(p.alpha2)};
  const double unit_x = cfg.cutoff_mode == CutoffMode::relative ? cfg.jump_cutoff : cut_x;
  const double unit_y = cfg.cutoff_mode == CutoffMode::relative ? cfg.jump_cutoff : cut_y;
  const auto n1 = rng.poisson(exact_jump_rate(lx, p.alpha1, cut_x) * dt);
  for (std::uint64_t k = 0; k < n1; ++k) {
    const double mark = rng.uniform();
    d.jumps1.emplace_back(mark, sample_jump(m1, unit_x, rng.uniform()));
  }
  const auto n2 = rng.poisson(exact_jump_rate(ly, p.alpha2, cut_y) * dt);
  for (std::uint64_t k = 0; k < n2; ++k) {
    const double mark = rng.uniform();
    d.jumps2.emplace_back(mark, sample_jump(m2, unit_y, rng.uniform()));
  }
}

double step_length(const SimConfig& cfg, double rate, double t, double next_stop, double positivity) {
  double h = std::min(cfg.dt, positivity);
  if (rate > 0) h = std::min(h, cfg.max_jump_mean / rate);
  h = std::max(h, cfg.min_dt);
  return std::min(h, next_stop - t);
}

}  // namespace

PathRecord simulate_path(const ModelParams& p, const SimConfig& cfg, std::uint64_t path_seed,
                         const StepObserver& observer) {
  cfg.check(p);
  PathRecord rec;
  rec.seed = path_seed;
  RandomStream rng(cfg.master_seed, path_seed);
  double x = p.x0, y = p.y0, t = 0;
  rec.sup_x = x;
  rec.sup_y = y;
  bool dead_x = false, dead_y = false;
  double next_cp = cfg.checkpoint_dt > 0 ? 0 : std::numeric_limits<double>::infinity();
  StepDraws draws;
  StepInfo info;
  const Axis1 ax = axis_x(p), ay = axis_y(p);

  auto record_checkpoint = [&] {
    while (next_cp <= t + 1e-12 * std::max(1.0, t)) {
      rec.checkpoints.push_back({next_cp, x, y});
      next_cp += cfg.checkpoint_dt;
      if (next_cp > cfg.horizon * (1 + 1e-12)) next_cp = std::numeric_limits<double>::infinity();
    }
  };
  record_checkpoint();

  for (;;) {
    if (t >= cfg.horizon * (1 - 1e-15)) {
      rec.event = StopEvent::HorizonEnd;
      break;
    }
    const double cx = effective_cutoff(cfg, x), cy = effective_cutoff(cfg, y);
    const double lx = dead_x ? 0 : jump_level_x(p, x);
    const double ly = dead_y ? 0 : jump_level_y(p, y);
    const double rate = exact_jump_rate(lx, p.alpha1, cx) + exact_jump_rate(ly, p.alpha2, cy);
    const double pos = std::min(positivity_step(ax, cfg, x, y), positivity_step(ay, cfg, y, x));
    const double h = step_length(cfg, rate, t, std::min(cfg.horizon, next_cp), pos);
    if (observer) observer(t, h, x, y);
    draw_step(rng, cfg, p, h, lx, ly, cx, cy, draws);
    euler_step(p, cfg, x, y, h, draws, &info);
    t += h;
    ++rec.steps;
    if (info.clamp_x > 0 || info.clamp_y > 0) {
      ++rec.clamp_count;
      rec.max_clamp = std::max({rec.max_clamp, info.clamp_x, info.clamp_y});
    }
    rec.sup_x = std::max(rec.sup_x, x);
    rec.sup_y = std::max(rec.sup_y, y);
    if (cfg.probe_eps > 0) {
      if (x <= cfg.probe_eps && std::isinf(rec.probe_time_x)) rec.probe_time_x = t;
      if (y <= cfg.probe_eps && std::isinf(rec.probe_time_y)) rec.probe_time_y = t;
    }
    if (!dead_x && x <= cfg.eps_ext) {
      dead_x = true;
      x = 0;
      rec.ext_time_x = t;
    }
    if (!dead_y && y <= cfg.eps_ext) {
      dead_y = true;
      y = 0;
      rec.ext_time_y = t;
    }
    record_checkpoint();
    if (x >= cfg.n_max || y >= cfg.n_max) {
      rec.event = StopEvent::Explode;
      break;
    }
    if (dead_x && dead_y) {
      rec.event = StopEvent::ExtinctBoth;
      break;
    }
    if (dead_y && cfg.stop_on_y_extinction) {
      rec.event = StopEvent::ExtinctY;
      break;
    }
  }
  if (rec.event == StopEvent::HorizonEnd) {
    // A single extinction that did not end the run still names the event.
    if (dead_x && !dead_y) rec.event = StopEvent::ExtinctX;
    if (dead_y && !dead_x) rec.event = StopEvent::ExtinctY;
  }
  if (rec.event == StopEvent::HorizonEnd) {
    rec.event_time = std::min(t, cfg.horizon);
  } else if (rec.event == StopEvent::Explode) {
    rec.event_time = t;
  } else if (rec.event == StopEvent::ExtinctX) {
    rec.event_time = rec.ext_time_x;
  } else if (rec.event == StopEvent::ExtinctY) {
    rec.event_time = rec.ext_time_y;
  } else {
    rec.event_time = std::max(rec.ext_time_x, rec.ext_time_y);
  }
  rec.terminal_x = x;
  rec.terminal_y = y;
  return rec;
}

CouplingReport simulate_coupled(const ModelParams& p, const SimConfig& cfg, double x0, double y0, double xt0,
                                double yt0, std::uint64_t path_seed, int n_checkpoints) {
  if (!(xt0 >= x0 && yt0 <= y0)) {
    throw UnorderedInitial("coupled start needs x~0 >= x0 and y~0 <= y0");
  }
  if (cfg.cutoff_mode != CutoffMode::absolute) {
    throw ConfigError("coupled simulation needs an absolute jump cutoff");
  }
  if (n_checkpoints < 1) throw ConfigError("n_checkpoints must be positive");
  ModelParams lo = p, hi = p;
  lo.x0 = x0;
  lo.y0 = y0;
  hi.x0 = xt0;
  hi.y0 = yt0;
  cfg.check(lo);
  cfg.check(hi);

  CouplingReport rep;
  rep.dt = cfg.dt;
  RandomStream rng(cfg.master_seed, path_seed);
  double x = x0, y = y0, xt = xt0, yt = yt0, t = 0;
  const double spacing = cfg.horizon / n_checkpoints;
  int next_index = 1;
  StepDraws draws;
  const double cut = cfg.jump_cutoff;
  const Axis1 ax = axis_x(p), ay = axis_y(p);
  while (next_index <= n_checkpoints) {
    const double target = spacing * next_index;
    const double lx = std::max(jump_level_x(p, x), jump_level_x(p, xt));
    const double ly = std::max(jump_level_y(p, y), jump_level_y(p, yt));
    const double rate = exact_jump_rate(lx, p.alpha1, cut) + exact_jump_rate(ly, p.alpha2, cut);
    const double pos = std::min({positivity_step(ax, cfg, x, y), positivity_step(ay, cfg, y, x),
                                 positivity_step(ax, cfg, xt, yt), positivity_step(ay, cfg, yt, xt)});
    const double h = step_length(cfg, rate, t, target, pos);
    draw_step(rng, cfg, p, h, lx, ly, cut, cut, draws);
    euler_step(p, cfg, x, y, h, draws);
    euler_step(p, cfg, xt, yt, h, draws);
    t += h;
    const bool stopped = x <= cfg.eps_ext || y <= cfg.eps_ext || xt <= cfg.eps_ext || yt <= cfg.eps_ext ||
                         std::max({x, y, xt, yt}) >= cfg.n_max;
    if (stopped) break;
    if (t >= target * (1 - 1e-12)) {
      const bool okx = xt >= x, oky = yt <= y;
      rep.x_ordered.push_back(okx);
      rep.y_ordered.push_back(oky);
      ++rep.checkpoints;
      if (!okx || !oky) {
        ++rep.violations;
        rep.max_violation = std::max({rep.max_violation, std::max(0.0, x - xt), std::max(0.0, yt - y)});
      }
      ++next_index;
    }
  }
  return rep;
}

}  // namespace lvlab
