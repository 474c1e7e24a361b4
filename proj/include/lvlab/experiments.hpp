#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lvlab/config.hpp"
#include "lvlab/errors.hpp"
#include "lvlab/model.hpp"
#include "lvlab/quadrature.hpp"
#include "lvlab/sde_engine.hpp"
#include "lvlab/test_functions.hpp"

namespace lvlab {

struct Interval {
  double lo = 0;
  double hi = 1;
};

// Wilson score interval for a binomial proportion; z = 1.96 gives 95%.
Interval wilson_interval(std::uint64_t successes, std::uint64_t n, double z = 1.959963984540054);

// Engine settings from a key-value file: dt, horizon, jump_cutoff, small_jump_mode,
// cutoff_mode, eps_ext, probe_eps, n_max, master_seed, checkpoint_dt, max_jump_mean,
// max_relative_move, min_dt. Missing keys keep the values of `base`.
SimConfig sim_config_from_config(const KeyValueConfig& cfg, SimConfig base = {});
std::string canonical_string(const SimConfig& cfg);
std::string digest(const std::string& canonical);

struct ConsistencyThresholds {
  double null_upper = 0.05;   // no-extinction verdicts: upper CI bound at the longest horizon
  double sure_floor = 0.8;    // sure extinction: frequency at the longest horizon
  double partial_lo = 0.05;   // partial extinction: frequency band at the longest horizon
  double partial_hi = 0.95;
  double eps_gap_max = 0.05;  // spread of frequencies across eps_ext levels
};

struct CampaignOptions {
  std::vector<double> eps_levels{1e-6, 1e-8};
  ConsistencyThresholds thresholds;
  int workers = 1;
  std::size_t min_paths = 100;
  // Nothing is written when empty.
  std::filesystem::path out_dir;
  std::string name = "campaign";
};

struct CampaignCell {
  double horizon = 0;
  double eps_ext = 0;
  std::uint64_t n_paths = 0;
  std::uint64_t extinct_y = 0;
  double frequency = 0;
  Interval ci;
};

struct EstimateSummary {
  std::string params_digest;
  std::string cfg_digest;
  ModelParams params;
  RegimeVerdict verdict;
  std::uint64_t n_paths = 0;
  std::vector<double> ladder;
  std::vector<double> eps_levels;
  std::vector<CampaignCell> cells;  // eps-major, ladder order within

  // Longest horizon at the smallest eps_ext.
  std::uint64_t extinct_y_count = 0;
  double frequency = 0;
  Interval ci;

  // Largest spread of the frequency across eps_ext levels over the ladder.
  double eps_gap = 0;
  bool gated = false;  // false for conjectured and unsettled verdicts
  bool rule_pass = false;
  bool gap_pass = false;
  bool consistent = false;
  std::string rule;

  std::uint64_t explode_count = 0;
  std::uint64_t clamp_count = 0;

  // Per-path and per-cell CSV text, identical to the persisted files.
  std::string paths_csv;
  std::string cells_csv;

  const CampaignCell& cell(double horizon, double eps_ext) const;
};

// Simulates n_paths per eps_ext level up to the longest horizon of the ladder and
// estimates P(Y reaches eps_ext by T) for every ladder entry. Path i uses stream i of
// cfg.master_seed at every level, so levels share random input.
EstimateSummary run_extinction_campaign(const ModelParams& params, const SimConfig& cfg, std::size_t n_paths,
                                        const std::vector<double>& ladder, const CampaignOptions& opts = {});

std::string to_json(const EstimateSummary& s);

struct SupTailCell {
  double x0 = 0;
  double level = 0;
  std::uint64_t n_paths = 0;
  std::uint64_t hits = 0;
  double probability = 0;
  Interval ci;
};

struct SupTailReport {
  std::vector<double> x0_grid;
  std::vector<double> levels;
  std::vector<SupTailCell> cells;  // x0-major
  bool monotone_in_x0 = false;     // non-decreasing within the intervals
  bool monotone_in_level = false;  // non-increasing within the intervals
  // Least-squares slope of log P against log x0 per level; NaN with fewer than two positive cells.
  std::vector<double> slopes;
  std::string csv;

  const SupTailCell& cell(double x0, double level) const;
};

// P(sup_{t <= horizon} X_t >= level) for each starting x0 (y0 from params). The observed
// supremum is capped at cfg.n_max, where paths stop.
SupTailReport run_sup_tail_check(const ModelParams& params, const SimConfig& cfg, const std::vector<double>& x0_grid,
                                 const std::vector<double>& levels, std::size_t n_paths, int workers = 1);

std::string to_json(const SupTailReport& r);

struct MartingalePoint {
  double t = 0;
  double mean = 0;
  double se = 0;
  bool pass = false;  // |mean| <= 3 se
};

struct MartingaleReport {
  std::string test_function;
  double dt = 0;
  std::uint64_t n_paths = 0;
  std::uint64_t boundary_contacts = 0;
  std::vector<MartingalePoint> points;
  bool pass = false;
};

// Thrown when a path stops or touches an axis before the last time; carries the
// statistics of the remaining paths.
class BoundaryContact : public Error {
 public:
  BoundaryContact(const std::string& what, MartingaleReport report) : Error(what), report_(std::move(report)) {}
  const MartingaleReport& report() const noexcept { return report_; }

 private:
  MartingaleReport report_;
};

// Mean and standard error of g(X_t, Y_t) - g(x0, y0) - int_0^t Lg ds, with the integral
// taken on the simulation steps. Times must share a common step (checked).
MartingaleReport run_martingale_check(const ModelParams& params, const TestFunction& g,
                                      const std::vector<double>& times, std::size_t n_paths, const SimConfig& cfg,
                                      int workers = 1, const QuadratureConfig& quad = {});

// True when at every time the finer run's |mean| is no larger than the coarser one's
// plus z combined standard errors.
bool bias_shrinks_or_holds(const MartingaleReport& coarse, const MartingaleReport& fine, double z = 2.0);

std::string to_json(const MartingaleReport& r);

struct InitialCondition {
  std::string label;
  double x0 = 1;
  double y0 = 1;
};

// x0 = eps^{1 + 1/beta}, y0 = u0 eps^{beta + 1}: starts on the ratio curve y = u0 x^beta.
InitialCondition scaled_initial_pair(double eps, double beta, double u0);

struct SweepAxis {
  std::string name;
  std::vector<double> values;
};

struct SweepSpec {
  ModelParams base;
  SimConfig cfg;
  std::vector<SweepAxis> axes;  // full product, first axis slowest
  std::vector<double> ladder{10, 25, 50};
  // Empty means the base params' (x0, y0).
  std::vector<InitialCondition> initial;
  std::size_t n_paths = 1000;
  CampaignOptions campaign;

  // Throws ConfigError for empty or unknown axes, an empty or non-increasing ladder.
  void check() const;
};

struct SweepCell {
  std::size_t index = 0;
  std::vector<double> values;
  InitialCondition initial;
  std::optional<EstimateSummary> summary;
  std::string error;  // set when the cell failed; other cells still run
};

struct SweepResult {
  std::vector<SweepCell> cells;
  std::string regime_csv;
};

SweepResult run_sweep(const SweepSpec& spec);

}  // namespace lvlab
