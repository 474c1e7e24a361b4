#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lvlab/config.hpp"
#include "lvlab/criteria.hpp"
#include "lvlab/experiments.hpp"
#include "lvlab/generator.hpp"
#include "lvlab/model.hpp"
#include "lvlab/parallel.hpp"
#include "lvlab/report.hpp"
#include "lvlab/sde_engine.hpp"
#include "lvlab/stable_measure.hpp"

using namespace lvlab;
using nlohmann::json;

namespace {

struct Global {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int workers = 1;
  bool strict = false;
};

struct Loaded {
  KeyValueConfig kv;
  ModelParams params;
  SimConfig sim;
};

Loaded load(const Global& g) {
  Loaded l;
  if (!g.config.empty()) l.kv = KeyValueConfig::load(g.config);
  l.params = params_from_config(l.kv);
  l.sim = sim_config_from_config(l.kv);
  if (g.seed) l.sim.master_seed = *g.seed;
  for (const auto& k : l.kv.unused_keys()) std::cerr << "warning: unused config key '" << k << "'\n";
  return l;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(format_number(v)); }

json cert_json(const GridCertificate& c) {
  return {{"check", c.check},       {"region", c.region},         {"resolution", c.resolution},
          {"nodes", c.nodes},       {"violations", c.violations}, {"worst_margin", number(c.worst_margin)},
          {"worst_at", {number(c.worst_c1), number(c.worst_c2)}}, {"axes", {c.axis1, c.axis2}},
          {"pass", c.pass},         {"notes", c.notes}};
}

json constants_json(const ConstantsFound& c) {
  json j = json::object();
  for (const auto& [k, v] : c) j[k] = number(v);
  return j;
}

json certified_json(const CertifiedConstants& c) {
  return {{"constants", constants_json(c.constants)},
          {"certificate", cert_json(c.certificate)},
          {"refined", cert_json(c.refined)},
          {"pass", c.pass()}};
}

void emit(const Global& g, const std::string& file, const std::string& text) {
  std::cout << text << "\n";
  if (!g.out.empty()) write_text_file(std::filesystem::path(g.out) / file, text + "\n");
}

TestFunctionPtr make_function(const std::string& family, double beta, double delta, double rho, double lambda,
                              double r, double n) {
  if (family == "power_ratio") return make_power_ratio({beta, delta, rho});
  if (family == "exp_ratio") return make_exp_ratio({lambda, r, beta});
  if (family == "log_sum") return make_log_sum(n, beta);
  if (family == "log_x") return make_log_x(n);
  if (family == "constant") return make_polynomial(1, 0, 0, 0, 0);
  throw ConfigError("unknown test function family '" + family + "'");
}

json terms_json(const GeneratorTerms& t) {
  return {{"drift_x", t.drift_x},           {"diff_x", t.diff_x},
          {"jump_x", t.jump_x},             {"drift_y", t.drift_y},
          {"diff_y", t.diff_y},             {"jump_y", t.jump_y},
          {"interaction_x", t.interaction_x}, {"interaction_y", t.interaction_y},
          {"total", t.total}};
}

bool too_much_clamping(const std::vector<PathRecord>& recs, double tol) {
  for (const auto& r : recs) {
    if (r.max_clamp > tol) return true;
  }
  return false;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo and test-function toolkit for stable Lotka-Volterra jump systems"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--config", g.config, "key = value parameter file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed (overrides master_seed in the config)");
  app.add_option("--out", g.out, "directory for CSV and JSON outputs");
  app.add_option("--workers", g.workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--strict", g.strict, "fail on clamp warnings and inconsistent campaigns");

  int rc = 0;

  auto* classify_cmd = app.add_subcommand("classify", "regime verdict for the configured parameters");
  classify_cmd->callback([&] {
    const auto l = load(g);
    emit(g, "verdict.json", verdict_to_json(classify(validate(l.params))));
  });

  auto* integrals = app.add_subcommand("integrals", "closed-form binomial integrals against quadrature");
  double int_alpha = 1.5;
  std::vector<double> int_betas{0.25};
  std::string int_kind;
  integrals->add_option("--alpha", int_alpha, "stability index in (1,2)");
  integrals->add_option("--beta", int_betas, "exponents")->delimiter(',');
  integrals->add_option("--kind", int_kind, "one kind (default: all admissible)");
  integrals->callback([&] {
    const auto m = make_stable_measure(int_alpha);
    QuadratureConfig q;
    json rows = json::array();
    for (auto kind : {BinomialKind::neg_power_linear, BinomialKind::neg_power_compensated,
                      BinomialKind::pos_power_linear, BinomialKind::pos_power_compensated}) {
      if (!int_kind.empty() && binomial_kind_from_string(int_kind) != kind) continue;
      for (double b : int_betas) {
        if (!binomial_beta_admissible(kind, int_alpha, b)) continue;
        const double c = binomial_power_integral(m, kind, b);
        const double n = binomial_power_integral_quadrature(m, kind, b, q);
        rows.push_back({{"kind", to_string(kind)},
                        {"alpha", int_alpha},
                        {"beta", b},
                        {"closed_form", c},
                        {"quadrature", n},
                        {"rel_error", std::abs(c - n) / std::max(1e-300, std::abs(c))}});
      }
    }
    emit(g, "integrals.json", rows.dump(2));
  });

  auto* gen = app.add_subcommand("generator-check", "generator terms with closed-form and quadrature jumps");
  std::string family = "power_ratio";
  double f_beta = 1, f_delta = 0.25, f_rho = 0.5, f_lambda = 1, f_r = 0.5, f_n = 10;
  std::vector<double> gx{1}, gy{1};
  auto shape_options = [&](CLI::App* cmd) {
    cmd->add_option("--family", family, "power_ratio, exp_ratio, log_sum, log_x or constant");
    cmd->add_option("--beta", f_beta);
    cmd->add_option("--delta", f_delta);
    cmd->add_option("--rho", f_rho);
    cmd->add_option("--lambda", f_lambda);
    cmd->add_option("--r", f_r);
    cmd->add_option("--n", f_n);
  };
  shape_options(gen);
  gen->add_option("--x", gx, "x values")->delimiter(',');
  gen->add_option("--y", gy, "y values")->delimiter(',');
  gen->callback([&] {
    const auto l = load(g);
    const auto fn = make_function(family, f_beta, f_delta, f_rho, f_lambda, f_r, f_n);
    QuadratureConfig q;
    json rows = json::array();
    bool ok = true;
    for (double x : gx) {
      for (double y : gy) {
        const auto closed = apply_generator(l.params, *fn, x, y, q, 0, JumpSource::closed_form_if_available);
        const auto quad = apply_generator(l.params, *fn, x, y, q, 0, JumpSource::quadrature);
        const double err = std::abs(closed.total - quad.total) / std::max(1.0, quad.magnitude());
        ok = ok && err < 1e-8;
        rows.push_back({{"x", x}, {"y", y}, {"closed_form", terms_json(closed)}, {"quadrature", terms_json(quad)},
                        {"rel_error", err}});
      }
    }
    emit(g, "generator.json", json{{"test_function", fn->describe()}, {"points", rows}, {"agree", ok}}.dump(2));
    if (!ok) rc = 1;
  });

  auto* lemma = app.add_subcommand("lemma-check", "bump, exp_ratio and Young inequalities on grids and draws");
  std::vector<double> lemma_alphas{1.2, 1.5, 1.8};
  int lemma_res = 200;
  std::size_t lemma_draws = 200;
  lemma->add_option("--alpha", lemma_alphas, "stability indices")->delimiter(',');
  lemma->add_option("--resolution", lemma_res);
  lemma->add_option("--draws", lemma_draws, "random draws for the exp_ratio and Young checks");
  lemma->callback([&] {
    const auto l = load(g);
    CriteriaOptions o;
    o.resolution = lemma_res;
    o.workers = g.workers;
    json bumps = json::array();
    bool ok = true;
    for (double a : lemma_alphas) {
      const auto rep = check_bump_lemma(a, o);
      json certs = json::array();
      for (const auto& c : rep.certificates) certs.push_back(cert_json(c));
      bumps.push_back({{"alpha", a}, {"constants", constants_json(rep.constants)}, {"certificates", certs},
                       {"pass", rep.pass()}});
      ok = ok && rep.pass();
    }
    const auto er = check_exp_ratio_bounds(lemma_draws, l.sim.master_seed, o);
    const auto yg = check_young(lemma_draws * 100, l.sim.master_seed);
    ok = ok && er.pass && yg.pass;
    emit(g, "lemmas.json",
         json{{"bump", bumps}, {"exp_ratio_bounds", cert_json(er)}, {"young", cert_json(yg)}, {"pass", ok}}.dump(2));
    if (!ok) rc = 1;
  });

  auto* crit = app.add_subcommand("criteria-check", "search and certify test-function constants");
  std::string crit_check = "auto";
  int crit_res = 200;
  std::string crit_subcase = "iia";
  double logx_n = 10;
  crit->add_option("--check", crit_check,
                   "auto, iia, iib, iic, iid, iiia, iiib, log_x, exp_tan, irreducibility or survival");
  crit->add_option("--resolution", crit_res);
  crit->add_option("--subcase", crit_subcase, "recipe feeding the survival check");
  crit->add_option("--n", logx_n, "log_x truncation level");
  crit->callback([&] {
    const auto l = load(g);
    CriteriaOptions o;
    o.resolution = crit_res;
    o.workers = g.workers;
    std::string which = crit_check;
    if (which == "auto") {
      const auto v = classify(validate(l.params));
      for (auto s : {Subcase::iia, Subcase::iib, Subcase::iic, Subcase::iid, Subcase::iiia, Subcase::iiib}) {
        for (const auto& f : v.fired_conditions) {
          if (f == classifier_tag(s) && which == "auto") which = to_string(s);
        }
      }
      if (which == "auto") throw ConfigError("no partial or sure subcase fires for these parameters");
    }
    json out;
    bool ok = false;
    try {
      if (which == "log_x") {
        const auto c = check_log_x_bound(l.params, logx_n, o);
        out = cert_json(c);
        ok = c.pass;
      } else if (which == "exp_tan") {
        const auto c = check_exp_tan(l.params, o);
        out = certified_json(c);
        ok = c.pass();
      } else if (which == "irreducibility") {
        const auto c = check_prop24_bump(l.params, BumpTarget{}, o);
        out = certified_json(c);
        ok = c.pass();
      } else if (which == "survival") {
        const auto h = check_htilde_positivity(l.params, subcase_from_string(crit_subcase), o);
        const PowerRatioShape s{constant(h.constants, "beta"), constant(h.constants, "delta"),
                                constant(h.constants, "rho")};
        const auto c = check_prop25_conditions(l.params, s, constant(h.constants, "z_star"),
                                               constant(h.constants, "eps0"), o);
        out = {{"recipe", certified_json(h)}, {"certificate", cert_json(c)}};
        ok = c.pass && h.pass();
      } else {
        const Subcase s = subcase_from_string(which);
        const auto c = (s == Subcase::iiia || s == Subcase::iiib) ? check_H_lower_bound(l.params, s, o)
                                                                   : check_htilde_positivity(l.params, s, o);
        out = certified_json(c);
        ok = c.pass();
      }
    } catch (const SearchFailed& e) {
      out = {{"error", e.what()}, {"best", cert_json(e.best())}};
    }
    out["check"] = which;
    out["pass"] = ok;
    emit(g, "criteria_" + which + ".json", out.dump(2));
    if (!ok) rc = 1;
  });

  auto* sim = app.add_subcommand("simulate", "simulate independent paths");
  std::size_t sim_paths = 100;
  double clamp_tol = 1e-8;
  sim->add_option("--paths", sim_paths);
  sim->add_option("--clamp-tol", clamp_tol, "largest tolerated negative overshoot before clamping");
  sim->callback([&] {
    const auto l = load(g);
    std::vector<PathRecord> recs(sim_paths);
    parallel_for(sim_paths, g.workers, [&](std::size_t i) { recs[i] = simulate_path(l.params, l.sim, i); });
    CsvTable paths({"path_id", "seed", "event", "event_time", "term_x", "term_y", "sup_x", "sup_y", "clamp_count"});
    CsvTable cps({"path_id", "t", "x", "y"});
    json counts = json::object();
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const auto& r = recs[i];
      paths.add_row({std::to_string(i), std::to_string(r.seed), to_string(r.event), format_number(r.event_time),
                     format_number(r.terminal_x), format_number(r.terminal_y), format_number(r.sup_x),
                     format_number(r.sup_y), std::to_string(r.clamp_count)});
      for (const auto& c : r.checkpoints) {
        cps.add_row({std::to_string(i), format_number(c.t), format_number(c.x), format_number(c.y)});
      }
      counts[to_string(r.event)] = counts.value(to_string(r.event), 0) + 1;
    }
    if (!g.out.empty()) {
      write_text_file(std::filesystem::path(g.out) / "paths.csv", paths.str());
      if (cps.rows()) write_text_file(std::filesystem::path(g.out) / "checkpoints.csv", cps.str());
    }
    const bool clamp_warning = too_much_clamping(recs, clamp_tol);
    if (clamp_warning) std::cerr << "warning: clamping above " << clamp_tol << " occurred\n";
    emit(g, "simulate_summary.json",
         json{{"params_digest", digest(canonical_string(l.params))},
              {"cfg_digest", digest(canonical_string(l.sim))},
              {"n_paths", sim_paths},
              {"events", counts},
              {"clamp_warning", clamp_warning}}
             .dump(2));
    if (g.strict && clamp_warning) rc = 1;
  });

  auto* couple = app.add_subcommand("couple", "ordering checks on coupled pairs");
  std::size_t cp_paths = 1000;
  int cp_checkpoints = 100;
  double xt0 = NAN, yt0 = NAN;
  couple->add_option("--paths", cp_paths);
  couple->add_option("--checkpoints", cp_checkpoints);
  couple->add_option("--xt0", xt0, "start of the larger X (default 1.01 x0)");
  couple->add_option("--yt0", yt0, "start of the smaller Y (default 0.99 y0)");
  couple->callback([&] {
    const auto l = load(g);
    const double xa = std::isnan(xt0) ? 1.01 * l.params.x0 : xt0;
    const double ya = std::isnan(yt0) ? 0.99 * l.params.y0 : yt0;
    std::vector<CouplingReport> reps(cp_paths);
    parallel_for(cp_paths, g.workers, [&](std::size_t i) {
      reps[i] = simulate_coupled(l.params, l.sim, l.params.x0, l.params.y0, xa, ya, i, cp_checkpoints);
    });
    CsvTable csv({"path_id", "checkpoints", "violations", "max_violation"});
    std::uint64_t total = 0, bad = 0;
    double worst = 0;
    for (std::size_t i = 0; i < reps.size(); ++i) {
      total += reps[i].checkpoints;
      bad += reps[i].violations;
      worst = std::max(worst, reps[i].max_violation);
      csv.add_row({std::to_string(i), std::to_string(reps[i].checkpoints), std::to_string(reps[i].violations),
                   format_number(reps[i].max_violation)});
    }
    if (!g.out.empty()) write_text_file(std::filesystem::path(g.out) / "coupling.csv", csv.str());
    emit(g, "coupling_summary.json",
         json{{"dt", l.sim.dt},
              {"pairs", cp_paths},
              {"checkpoints", total},
              {"violations", bad},
              {"violation_fraction", total ? double(bad) / total : 0.0},
              {"max_violation", worst}}
             .dump(2));
  });

  auto* ext = app.add_subcommand("extinction", "extinction-frequency campaign against the verdict");
  std::size_t ext_paths = 2000;
  std::vector<double> ladder{10, 25, 50};
  std::vector<double> eps_levels{1e-6, 1e-8};
  std::string name = "campaign";
  ext->add_option("--paths", ext_paths);
  ext->add_option("--ladder", ladder, "increasing horizons")->delimiter(',');
  ext->add_option("--eps", eps_levels, "extinction levels")->delimiter(',');
  ext->add_option("--name", name, "file stem for the outputs");
  ext->callback([&] {
    const auto l = load(g);
    CampaignOptions o;
    o.eps_levels = eps_levels;
    o.workers = g.workers;
    o.out_dir = g.out;
    o.name = name;
    const auto s = run_extinction_campaign(l.params, l.sim, ext_paths, ladder, o);
    std::cout << to_json(s) << "\n";
    if (g.strict && (!s.consistent || s.clamp_count > 0)) rc = 1;
  });

  auto* sweep = app.add_subcommand("sweep", "campaigns over a parameter grid");
  std::vector<std::string> axes;
  std::vector<std::string> initials;
  std::size_t sweep_paths = 1000;
  std::vector<double> sweep_ladder{10, 25, 50};
  std::vector<double> sweep_eps{1e-6, 1e-8};
  sweep->add_option("--axis", axes, "name=v1,v2,... (repeatable)")->required();
  sweep->add_option("--initial", initials, "eps,beta,u0 scaled starting pair (repeatable)");
  sweep->add_option("--paths", sweep_paths);
  sweep->add_option("--ladder", sweep_ladder)->delimiter(',');
  sweep->add_option("--eps", sweep_eps)->delimiter(',');
  sweep->callback([&] {
    const auto l = load(g);
    SweepSpec spec;
    spec.base = l.params;
    spec.cfg = l.sim;
    spec.ladder = sweep_ladder;
    spec.n_paths = sweep_paths;
    spec.campaign.eps_levels = sweep_eps;
    spec.campaign.workers = g.workers;
    spec.campaign.out_dir = g.out;
    auto split = [](const std::string& s) {
      std::vector<double> v;
      std::size_t pos = 0;
      while (pos <= s.size()) {
        const auto comma = s.find(',', pos);
        const auto piece = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!piece.empty()) {
          try {
            v.push_back(std::stod(piece));
          } catch (const std::exception&) {
            throw ConfigError("not a number: '" + piece + "'");
          }
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      return v;
    };
    for (const auto& a : axes) {
      const auto eq = a.find('=');
      if (eq == std::string::npos) throw ConfigError("axis must look like name=v1,v2: '" + a + "'");
      spec.axes.push_back({a.substr(0, eq), split(a.substr(eq + 1))});
    }
    for (const auto& s : initials) {
      const auto v = split(s);
      if (v.size() != 3) throw ConfigError("initial pair must be eps,beta,u0: '" + s + "'");
      spec.initial.push_back(scaled_initial_pair(v[0], v[1], v[2]));
    }
    const auto res = run_sweep(spec);
    json cells = json::array();
    bool ok = true;
    for (const auto& c : res.cells) {
      json j{{"cell", c.index}, {"values", c.values}, {"initial", c.initial.label}};
      if (c.summary) {
        j["verdict"] = to_string(c.summary->verdict.verdict);
        j["frequency"] = c.summary->frequency;
        j["ci95"] = {c.summary->ci.lo, c.summary->ci.hi};
        j["eps_gap"] = c.summary->eps_gap;
        j["gated"] = c.summary->gated;
        j["consistent"] = c.summary->consistent;
        ok = ok && c.summary->consistent;
      } else {
        j["error"] = c.error;
        ok = false;
      }
      cells.push_back(j);
    }
    emit(g, "sweep_summary.json", json{{"cells", cells}, {"all_consistent", ok}}.dump(2));
    if (g.strict && !ok) rc = 1;
  });

  auto* mart = app.add_subcommand("martingale", "mean of the generator martingale at fixed times");
  std::vector<double> times{0.1, 0.5, 1.0};
  std::size_t m_paths = 10000;
  double compare_dt = 0;
  shape_options(mart);
  mart->add_option("--times", times)->delimiter(',');
  mart->add_option("--paths", m_paths);
  mart->add_option("--compare-dt", compare_dt, "second, smaller dt for the bias trend");
  mart->callback([&] {
    const auto l = load(g);
    const auto fn = make_function(family, f_beta, f_delta, f_rho, f_lambda, f_r, f_n);
    json out;
    bool ok = true;
    try {
      const auto a = run_martingale_check(l.params, *fn, times, m_paths, l.sim, g.workers);
      out["coarse"] = json::parse(to_json(a));
      ok = a.pass;
      if (compare_dt > 0) {
        SimConfig fine = l.sim;
        fine.dt = compare_dt;
        fine.min_dt = std::min(fine.min_dt, compare_dt);
        const auto b = run_martingale_check(l.params, *fn, times, m_paths, fine, g.workers);
        out["fine"] = json::parse(to_json(b));
        out["bias_shrinks_or_holds"] = bias_shrinks_or_holds(a, b);
        ok = ok && b.pass && bias_shrinks_or_holds(a, b);
      }
    } catch (const BoundaryContact& e) {
      out["error"] = e.what();
      out["partial"] = json::parse(to_json(e.report()));
      ok = false;
    }
    out["pass"] = ok;
    emit(g, "martingale.json", out.dump(2));
    if (!ok) rc = 1;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
