#include "lvlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "lvlab/generator.hpp"
#include "lvlab/parallel.hpp"
#include "lvlab/report.hpp"

namespace lvlab {

namespace {

using nlohmann::json;

bool y_extinct_by(const PathRecord& r, double t) { return r.ext_time_y <= t; }

json interval_json(const Interval& i) { return json{{"lo", i.lo}, {"hi", i.hi}}; }

// Finite doubles as numbers, the rest as strings, so the document stays valid JSON.
json number(double v) { return std::isfinite(v) ? json(v) : json(format_number(v)); }

std::string check_rule(EstimateSummary& s, const ConsistencyThresholds& th) {
  const double t_max = s.ladder.back();
  char buf[160];
  switch (s.verdict.verdict) {
    case Verdict::NoExtinctionEither:
    case Verdict::NoExtinctionY: {
      s.gated = true;
      s.rule_pass = true;
      for (double e : s.eps_levels) s.rule_pass = s.rule_pass && s.cell(t_max, e).ci.hi <= th.null_upper;
      std::snprintf(buf, sizeof buf, "upper CI bound at T=%g <= %g for every eps_ext", t_max, th.null_upper);
      return buf;
    }
    case Verdict::SureExtinctionY: {
      s.gated = true;
      s.rule_pass = true;
      for (double e : s.eps_levels) {
        s.rule_pass = s.rule_pass && s.cell(t_max, e).frequency >= th.sure_floor;
        for (std::size_t k = 1; k < s.ladder.size(); ++k) {
          s.rule_pass = s.rule_pass && s.cell(s.ladder[k], e).frequency >= s.cell(s.ladder[k - 1], e).frequency;
        }
      }
      std::snprintf(buf, sizeof buf, "frequency at T=%g >= %g and non-decreasing over the ladder", t_max,
                    th.sure_floor);
      return buf;
    }
    case Verdict::PartialExtinctionY: {
      s.gated = true;
      s.rule_pass = true;
      for (double e : s.eps_levels) {
        const double f = s.cell(t_max, e).frequency;
        s.rule_pass = s.rule_pass && f >= th.partial_lo && f <= th.partial_hi;
      }
      std::snprintf(buf, sizeof buf, "frequency at T=%g within [%g, %g]", t_max, th.partial_lo, th.partial_hi);
      return buf;
    }
    default:
      s.gated = false;
      s.rule_pass = true;
      return "not gated";
  }
}

// Largest g with every value an integer multiple of it, up to a relative tolerance.
double common_step(const std::vector<double>& values) {
  const double scale = *std::max_element(values.begin(), values.end());
  const double tol = 1e-9 * scale;
  double g = values.front();
  for (double v : values) {
    double a = std::max(g, v), b = std::min(g, v);
    while (b > tol) {
      const double r = std::fmod(a, b);
      a = b;
      b = (r > b - tol) ? 0 : r;
    }
    g = a;
  }
  return g;
}

}  // namespace

Interval wilson_interval(std::uint64_t successes, std::uint64_t n, double z) {
  if (n == 0) return {0, 1};
  if (successes > n) throw DomainError("successes exceed trials");
  const double nn = static_cast<double>(n);
  const double p = successes / nn;
  const double z2 = z * z;
  const double denom = 1 + z2 / nn;
  const double centre = (p + z2 / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / denom;
  Interval i{std::max(0.0, centre - half), std::min(1.0, centre + half)};
  // Exact ends: the interval always contains the observed proportion.
  if (successes == 0) i.lo = 0;
  if (successes == n) i.hi = 1;
  return i;
}

SimConfig sim_config_from_config(const KeyValueConfig& kv, SimConfig c) {
  c.dt = kv.get_double("dt", c.dt);
  c.horizon = kv.get_double("horizon", c.horizon);
  c.jump_cutoff = kv.get_double("jump_cutoff", c.jump_cutoff);
  const std::string sj = kv.get_string("small_jump_mode", to_string(c.small_jump_mode));
  if (sj == "gaussian") {
    c.small_jump_mode = SmallJumpMode::gaussian;
  } else if (sj == "drop") {
    c.small_jump_mode = SmallJumpMode::drop;
  } else {
    throw ConfigError("small_jump_mode must be gaussian or drop, got '" + sj + "'");
  }
  const std::string cm = kv.get_string("cutoff_mode", to_string(c.cutoff_mode));
  if (cm == "absolute") {
    c.cutoff_mode = CutoffMode::absolute;
  } else if (cm == "relative") {
    c.cutoff_mode = CutoffMode::relative;
  } else {
    throw ConfigError("cutoff_mode must be absolute or relative, got '" + cm + "'");
  }
  c.eps_ext = kv.get_double("eps_ext", c.eps_ext);
  c.probe_eps = kv.get_double("probe_eps", c.probe_eps);
  c.n_max = kv.get_double("n_max", c.n_max);
  c.master_seed = kv.get_u64("master_seed", c.master_seed);
  c.checkpoint_dt = kv.get_double("checkpoint_dt", c.checkpoint_dt);
  c.max_jump_mean = kv.get_double("max_jump_mean", c.max_jump_mean);
  c.max_relative_move = kv.get_double("max_relative_move", c.max_relative_move);
  c.min_dt = kv.get_double("min_dt", c.min_dt);
  return c;
}

std::string canonical_string(const SimConfig& c) {
  std::string s;
  auto add = [&](const char* k, const std::string& v) {
    s += k;
    s += '=';
    s += v;
    s += ';';
  };
  add("dt", format_number(c.dt));
  add("jump_cutoff", format_number(c.jump_cutoff));
  add("small_jump_mode", to_string(c.small_jump_mode));
  add("cutoff_mode", to_string(c.cutoff_mode));
  add("eps_ext", format_number(c.eps_ext));
  add("probe_eps", format_number(c.probe_eps));
  add("n_max", format_number(c.n_max));
  add("horizon", format_number(c.horizon));
  add("master_seed", std::to_string(c.master_seed));
  add("checkpoint_dt", format_number(c.checkpoint_dt));
  add("max_jump_mean", format_number(c.max_jump_mean));
  add("max_relative_move", format_number(c.max_relative_move));
  add("min_dt", format_number(c.min_dt));
  add("stop_on_y_extinction", c.stop_on_y_extinction ? "1" : "0");
  return s;
}

std::string digest(const std::string& canonical) { return hex64(fnv1a64(canonical)); }

const CampaignCell& EstimateSummary::cell(double horizon, double eps_ext) const {
  for (const auto& c : cells) {
    if (c.horizon == horizon && c.eps_ext == eps_ext) return c;
  }
  throw Error("no campaign cell for T=" + format_number(horizon) + ", eps_ext=" + format_number(eps_ext));
}

EstimateSummary run_extinction_campaign(const ModelParams& params, const SimConfig& cfg, std::size_t n_paths,
                                        const std::vector<double>& ladder, const CampaignOptions& opts) {
  if (ladder.empty()) throw ConfigError("horizon ladder must not be empty");
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (!(ladder[k] > 0)) throw ConfigError("horizons must be positive");
    if (k && !(ladder[k] > ladder[k - 1])) throw ConfigError("horizon ladder must be strictly increasing");
  }
  if (opts.eps_levels.empty()) throw ConfigError("at least one eps_ext level is needed");
  if (n_paths < opts.min_paths) {
    throw InsufficientPaths("campaign cells need at least " + std::to_string(opts.min_paths) + " paths, got " +
                            std::to_string(n_paths));
  }

  EstimateSummary s;
  s.params = params;
  try {
    s.verdict = classify(validate(params));
  } catch (const ConstraintViolation& e) {
    // Decoupled systems (eta = 0) still simulate but have no verdict.
    validate(params, Validation::relaxed);
    s.verdict.verdict = Verdict::Unsettled;
    s.verdict.fired_conditions.push_back(std::string("unclassified: ") + e.what());
  }
  s.n_paths = n_paths;
  s.ladder = ladder;
  s.eps_levels = opts.eps_levels;
  std::sort(s.eps_levels.begin(), s.eps_levels.end(), std::greater<>());

  SimConfig base = cfg;
  base.horizon = ladder.back();
  base.stop_on_y_extinction = true;
  base.probe_eps = 0;
  base.checkpoint_dt = 0;
  s.params_digest = digest(canonical_string(params));
  std::string cfg_text = canonical_string(base) + "eps_levels=";
  for (double e : s.eps_levels) cfg_text += format_number(e) + ",";
  s.cfg_digest = digest(cfg_text);

  CsvTable paths({"eps_ext", "path_id", "seed", "event", "event_time", "term_x", "term_y", "sup_x", "sup_y",
                  "ext_time_x", "ext_time_y", "steps", "clamp_count"});
  CsvTable cells({"horizon", "eps_ext", "n_paths", "extinct_y", "frequency", "ci_lo", "ci_hi"});

  std::vector<PathRecord> records(n_paths);
  for (double eps : s.eps_levels) {
    SimConfig c = base;
    c.eps_ext = eps;
    c.check(params);
    parallel_for(n_paths, opts.workers, [&](std::size_t i) { records[i] = simulate_path(params, c, i); });
    for (std::size_t i = 0; i < n_paths; ++i) {
      const auto& r = records[i];
      if (r.event == StopEvent::Explode) ++s.explode_count;
      s.clamp_count += r.clamp_count;
      paths.add_row({format_number(eps), std::to_string(i), std::to_string(r.seed), to_string(r.event),
                     format_number(r.event_time), format_number(r.terminal_x), format_number(r.terminal_y),
                     format_number(r.sup_x), format_number(r.sup_y), format_number(r.ext_time_x),
                     format_number(r.ext_time_y), std::to_string(r.steps), std::to_string(r.clamp_count)});
    }
    for (double t : ladder) {
      CampaignCell cell;
      cell.horizon = t;
      cell.eps_ext = eps;
      cell.n_paths = n_paths;
      for (const auto& r : records) cell.extinct_y += y_extinct_by(r, t);
      cell.frequency = static_cast<double>(cell.extinct_y) / n_paths;
      cell.ci = wilson_interval(cell.extinct_y, n_paths);
      cells.add_row({format_number(t), format_number(eps), std::to_string(n_paths), std::to_string(cell.extinct_y),
                     format_number(cell.frequency), format_number(cell.ci.lo), format_number(cell.ci.hi)});
      s.cells.push_back(cell);
    }
  }

  const auto& head = s.cell(ladder.back(), s.eps_levels.back());
  s.extinct_y_count = head.extinct_y;
  s.frequency = head.frequency;
  s.ci = head.ci;
  for (double t : ladder) {
    double lo = 1, hi = 0;
    for (double e : s.eps_levels) {
      lo = std::min(lo, s.cell(t, e).frequency);
      hi = std::max(hi, s.cell(t, e).frequency);
    }
    s.eps_gap = std::max(s.eps_gap, hi - lo);
  }
  s.gap_pass = s.eps_gap < opts.thresholds.eps_gap_max;
  s.rule = check_rule(s, opts.thresholds);
  s.consistent = s.rule_pass && s.gap_pass;
  s.paths_csv = paths.str();
  s.cells_csv = cells.str();

  if (!opts.out_dir.empty()) {
    write_text_file(opts.out_dir / (opts.name + "_paths.csv"), s.paths_csv);
    write_text_file(opts.out_dir / (opts.name + "_cells.csv"), s.cells_csv);
    write_text_file(opts.out_dir / (opts.name + "_summary.json"), to_json(s) + "\n");
  }
  return s;
}

std::string to_json(const EstimateSummary& s) {
  json cells = json::array();
  for (const auto& c : s.cells) {
    cells.push_back({{"horizon", c.horizon},
                     {"eps_ext", c.eps_ext},
                     {"n_paths", c.n_paths},
                     {"extinct_y", c.extinct_y},
                     {"frequency", c.frequency},
                     {"ci95", interval_json(c.ci)}});
  }
  json j;
  j["params_digest"] = s.params_digest;
  j["cfg_digest"] = s.cfg_digest;
  j["params"] = canonical_string(s.params);
  j["verdict"] = json::parse(verdict_to_json(s.verdict));
  j["n_paths"] = s.n_paths;
  j["ladder"] = s.ladder;
  j["eps_levels"] = s.eps_levels;
  j["cells"] = cells;
  j["extinct_y_count"] = s.extinct_y_count;
  j["frequency"] = s.frequency;
  j["ci95"] = interval_json(s.ci);
  j["eps_gap"] = s.eps_gap;
  j["gated"] = s.gated;
  j["rule"] = s.rule;
  j["rule_pass"] = s.rule_pass;
  j["gap_pass"] = s.gap_pass;
  j["consistent"] = s.consistent;
  j["explode_count"] = s.explode_count;
  j["clamp_count"] = s.clamp_count;
  j["caveat"] = {{"finite_horizon", true},
                 {"extinction_proxy", "first passage below eps_ext"},
                 {"probability_one_and_zero", "one-sided frequency thresholds over a horizon ladder"}};
  return j.dump(2);
}

const SupTailCell& SupTailReport::cell(double x0, double level) const {
  for (const auto& c : cells) {
    if (c.x0 == x0 && c.level == level) return c;
  }
  throw Error("no sup-tail cell for x0=" + format_number(x0) + ", level=" + format_number(level));
}

SupTailReport run_sup_tail_check(const ModelParams& params, const SimConfig& cfg, const std::vector<double>& x0_grid,
                                 const std::vector<double>& levels, std::size_t n_paths, int workers) {
  if (x0_grid.empty() || levels.empty()) throw ConfigError("x0 grid and levels must not be empty");
  if (n_paths == 0) throw ConfigError("n_paths must be positive");
  SupTailReport rep;
  rep.x0_grid = x0_grid;
  rep.levels = levels;
  std::sort(rep.x0_grid.begin(), rep.x0_grid.end());
  std::sort(rep.levels.begin(), rep.levels.end());
  CsvTable csv({"x0", "level", "n_paths", "hits", "probability", "ci_lo", "ci_hi"});

  std::vector<double> sup(n_paths);
  for (double x0 : rep.x0_grid) {
    ModelParams p = params;
    p.x0 = x0;
    SimConfig c = cfg;
    c.checkpoint_dt = 0;
    c.check(p);
    parallel_for(n_paths, workers, [&](std::size_t i) { sup[i] = std::min(simulate_path(p, c, i).sup_x, c.n_max); });
    for (double level : rep.levels) {
      SupTailCell cell;
      cell.x0 = x0;
      cell.level = level;
      cell.n_paths = n_paths;
      // Paths stop at n_max, so nothing beyond it is observed.
      if (level <= c.n_max) {
        for (double v : sup) cell.hits += v >= level;
      }
      cell.probability = static_cast<double>(cell.hits) / n_paths;
      cell.ci = wilson_interval(cell.hits, n_paths);
      csv.add_row({format_number(x0), format_number(level), std::to_string(n_paths), std::to_string(cell.hits),
                   format_number(cell.probability), format_number(cell.ci.lo), format_number(cell.ci.hi)});
      rep.cells.push_back(cell);
    }
  }

  rep.monotone_in_x0 = true;
  rep.monotone_in_level = true;
  for (double level : rep.levels) {
    for (std::size_t k = 1; k < rep.x0_grid.size(); ++k) {
      const auto& a = rep.cell(rep.x0_grid[k - 1], level);
      const auto& b = rep.cell(rep.x0_grid[k], level);
      rep.monotone_in_x0 = rep.monotone_in_x0 && b.ci.hi >= a.ci.lo;
    }
  }
  for (double x0 : rep.x0_grid) {
    for (std::size_t k = 1; k < rep.levels.size(); ++k) {
      const auto& a = rep.cell(x0, rep.levels[k - 1]);
      const auto& b = rep.cell(x0, rep.levels[k]);
      rep.monotone_in_level = rep.monotone_in_level && b.ci.lo <= a.ci.hi;
    }
  }
  for (double level : rep.levels) {
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double x0 : rep.x0_grid) {
      const auto& c = rep.cell(x0, level);
      if (c.hits == 0) continue;
      const double lx = std::log(x0), ly = std::log(c.probability);
      n += 1;
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    const double den = n * sxx - sx * sx;
    rep.slopes.push_back(n >= 2 && den > 0 ? (n * sxy - sx * sy) / den : std::numeric_limits<double>::quiet_NaN());
  }
  rep.csv = csv.str();
  return rep;
}

std::string to_json(const SupTailReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"x0", c.x0},
                     {"level", c.level},
                     {"n_paths", c.n_paths},
                     {"hits", c.hits},
                     {"probability", c.probability},
                     {"ci95", interval_json(c.ci)}});
  }
  json slopes = json::array();
  for (double s : r.slopes) slopes.push_back(number(s));
  json j{{"x0_grid", r.x0_grid},
         {"levels", r.levels},
         {"cells", cells},
         {"monotone_in_x0", r.monotone_in_x0},
         {"monotone_in_level", r.monotone_in_level},
         {"log_log_slopes", slopes}};
  return j.dump(2);
}

MartingaleReport run_martingale_check(const ModelParams& params, const TestFunction& g,
                                      const std::vector<double>& times, std::size_t n_paths, const SimConfig& cfg,
                                      int workers, const QuadratureConfig& quad) {
  if (times.empty()) throw ConfigError("time grid must not be empty");
  if (n_paths < 2) throw ConfigError("martingale check needs at least two paths");
  std::vector<double> ts = times;
  std::sort(ts.begin(), ts.end());
  if (!(ts.front() > 0)) throw ConfigError("times must be positive");
  const double step = common_step(ts);
  std::vector<std::size_t> index;
  for (double t : ts) {
    const double k = std::round(t / step);
    if (std::abs(k * step - t) > 1e-9 * ts.back()) throw ConfigError("times do not share a common step");
    index.push_back(static_cast<std::size_t>(k));
  }
  if (index.back() > 1000000) throw ConfigError("time grid is too fine relative to its span");

  SimConfig c = cfg;
  c.horizon = ts.back();
  c.checkpoint_dt = step;
  c.stop_on_y_extinction = false;
  c.check(params);
  const double g0 = g.jet(params.x0, params.y0).value;
  const std::size_t k = ts.size();

  // Per path: M at each time, or NaN rows for paths that touched the boundary.
  std::vector<double> m(n_paths * k, 0.0);
  std::vector<char> contact(n_paths, 0);
  parallel_for(n_paths, workers, [&](std::size_t i) {
    double integral = 0;
    std::vector<double> at(k, 0.0);
    std::size_t next = 0;
    bool touched = false;
    auto observe = [&](double t, double h, double x, double y) {
      while (next < k && t >= ts[next] * (1 - 1e-12)) at[next++] = integral;
      if (touched) return;
      if (!(x > 0 && y > 0)) {
        touched = true;
        return;
      }
      integral += apply_generator(params, g, x, y, quad).total * h;
    };
    const PathRecord r = simulate_path(params, c, i, observe);
    while (next < k) at[next++] = integral;
    if (touched || r.event != StopEvent::HorizonEnd || r.checkpoints.size() <= index.back()) {
      contact[i] = 1;
      return;
    }
    for (std::size_t j = 0; j < k; ++j) {
      const auto& cp = r.checkpoints[index[j]];
      m[i * k + j] = g.jet(cp.x, cp.y).value - g0 - at[j];
    }
  });

  MartingaleReport rep;
  rep.test_function = g.describe();
  rep.dt = c.dt;
  rep.n_paths = n_paths;
  for (char ch : contact) rep.boundary_contacts += ch;
  const double n = static_cast<double>(n_paths - rep.boundary_contacts);
  rep.pass = rep.boundary_contacts == 0;
  for (std::size_t j = 0; j < k; ++j) {
    double sum = 0;
    for (std::size_t i = 0; i < n_paths; ++i) {
      if (!contact[i]) sum += m[i * k + j];
    }
    const double mean = n > 0 ? sum / n : 0;
    double ss = 0;
    for (std::size_t i = 0; i < n_paths; ++i) {
      if (!contact[i]) ss += (m[i * k + j] - mean) * (m[i * k + j] - mean);
    }
    MartingalePoint pt;
    pt.t = ts[j];
    pt.mean = mean;
    pt.se = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0;
    pt.pass = std::abs(pt.mean) <= 3 * pt.se;
    rep.pass = rep.pass && pt.pass;
    rep.points.push_back(pt);
  }
  if (rep.boundary_contacts > 0) {
    throw BoundaryContact(std::to_string(rep.boundary_contacts) + " of " + std::to_string(n_paths) +
                              " paths stopped or reached an axis before t=" + format_number(ts.back()),
                          rep);
  }
  return rep;
}

bool bias_shrinks_or_holds(const MartingaleReport& coarse, const MartingaleReport& fine, double z) {
  if (coarse.points.size() != fine.points.size()) throw ConfigError("reports use different time grids");
  for (std::size_t j = 0; j < coarse.points.size(); ++j) {
    const auto& a = coarse.points[j];
    const auto& b = fine.points[j];
    if (a.t != b.t) throw ConfigError("reports use different time grids");
    if (std::abs(b.mean) > std::abs(a.mean) + z * std::hypot(a.se, b.se)) return false;
  }
  return true;
}

std::string to_json(const MartingaleReport& r) {
  json pts = json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"t", p.t}, {"mean", p.mean}, {"se", p.se}, {"pass", p.pass}});
  }
  json j{{"test_function", r.test_function}, {"dt", r.dt},         {"n_paths", r.n_paths},
         {"boundary_contacts", r.boundary_contacts}, {"points", pts}, {"pass", r.pass}};
  return j.dump(2);
}

InitialCondition scaled_initial_pair(double eps, double beta, double u0) {
  if (!(eps > 0 && beta > 0 && u0 > 0)) throw ConfigError("scaled initial pair needs eps, beta, u0 > 0");
  InitialCondition ic;
  ic.x0 = std::pow(eps, 1 + 1 / beta);
  ic.y0 = u0 * std::pow(eps, beta + 1);
  ic.label = "eps=" + format_number(eps) + ";u0=" + format_number(u0);
  return ic;
}

void SweepSpec::check() const {
  if (axes.empty()) throw ConfigError("sweep needs at least one axis");
  for (const auto& a : axes) {
    if (a.values.empty()) throw ConfigError("sweep axis '" + a.name + "' has an empty grid");
    ModelParams probe = base;
    apply_param(probe, a.name, a.values.front());
  }
  if (ladder.empty()) throw ConfigError("horizon ladder must not be empty");
  for (std::size_t k = 1; k < ladder.size(); ++k) {
    if (!(ladder[k] > ladder[k - 1])) throw ConfigError("horizon ladder must be strictly increasing");
  }
}

SweepResult run_sweep(const SweepSpec& spec) {
  spec.check();
  std::vector<InitialCondition> starts = spec.initial;
  if (starts.empty()) starts.push_back({"base", spec.base.x0, spec.base.y0});

  std::size_t n_grid = 1;
  for (const auto& a : spec.axes) n_grid *= a.values.size();

  std::vector<std::string> header{"cell"};
  for (const auto& a : spec.axes) header.push_back(a.name);
  for (const char* h : {"initial", "x0", "y0", "verdict", "params_digest"}) header.push_back(h);
  for (double t : spec.ladder) header.push_back("freq_T" + format_number(t));
  for (const char* h : {"ci_lo", "ci_hi", "eps_gap", "gated", "consistent", "error"}) header.push_back(h);
  CsvTable table(header);

  SweepResult res;
  for (std::size_t g = 0; g < n_grid; ++g) {
    std::vector<double> values(spec.axes.size());
    std::size_t rem = g;
    for (std::size_t a = spec.axes.size(); a-- > 0;) {
      values[a] = spec.axes[a].values[rem % spec.axes[a].values.size()];
      rem /= spec.axes[a].values.size();
    }
    for (const auto& start : starts) {
      SweepCell cell;
      cell.index = res.cells.size();
      cell.values = values;
      cell.initial = start;
      ModelParams p = spec.base;
      for (std::size_t a = 0; a < spec.axes.size(); ++a) apply_param(p, spec.axes[a].name, values[a]);
      p.x0 = start.x0;
      p.y0 = start.y0;
      CampaignOptions opts = spec.campaign;
      opts.out_dir.clear();
      try {
        cell.summary = run_extinction_campaign(p, spec.cfg, spec.n_paths, spec.ladder, opts);
      } catch (const Error& e) {
        cell.error = e.what();
      }
      if (cell.summary && !spec.campaign.out_dir.empty()) {
        const auto stem = spec.campaign.out_dir / ("cell" + std::to_string(cell.index));
        write_text_file(stem.string() + "_paths.csv", cell.summary->paths_csv);
        write_text_file(stem.string() + "_cells.csv", cell.summary->cells_csv);
        write_text_file(stem.string() + "_summary.json", to_json(*cell.summary) + "\n");
      }

      std::vector<std::string> row{std::to_string(cell.index)};
      for (double v : values) row.push_back(format_number(v));
      row.push_back(start.label);
      row.push_back(format_number(start.x0));
      row.push_back(format_number(start.y0));
      if (cell.summary) {
        const auto& s = *cell.summary;
        row.push_back(to_string(s.verdict.verdict));
        row.push_back(s.params_digest);
        for (double t : spec.ladder) row.push_back(format_number(s.cell(t, s.eps_levels.back()).frequency));
        row.push_back(format_number(s.ci.lo));
        row.push_back(format_number(s.ci.hi));
        row.push_back(format_number(s.eps_gap));
        row.push_back(s.gated ? "1" : "0");
        row.push_back(s.consistent ? "1" : "0");
        row.push_back("");
      } else {
        row.push_back("");
        row.push_back(digest(canonical_string(p)));
        for (std::size_t t = 0; t < spec.ladder.size(); ++t) row.push_back("");
        for (int i = 0; i < 5; ++i) row.push_back("");
        row.push_back(cell.error);
      }
      table.add_row(std::move(row));
      // Keep what has been computed so far on disk.
      res.regime_csv = table.str();
      if (!spec.campaign.out_dir.empty()) write_text_file(spec.campaign.out_dir / "regime_map.csv", res.regime_csv);
      res.cells.push_back(std::move(cell));
    }
  }
  return res;
}

}  // namespace lvlab
