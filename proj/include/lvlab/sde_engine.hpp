#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "lvlab/model.hpp"
#include "lvlab/rng.hpp"

namespace lvlab {

enum class SmallJumpMode { drop, gaussian };
// absolute: jumps above jump_cutoff are simulated exactly.
// relative: the cutoff scales with the current state (jump_cutoff * x), which keeps the
// exact-jump rate bounded as the state grows and the Gaussian part small as it shrinks.
enum class CutoffMode { absolute, relative };

std::string to_string(SmallJumpMode m);
std::string to_string(CutoffMode m);

struct SimConfig {
  double dt = 1e-3;
  double jump_cutoff = 0.1;
  SmallJumpMode small_jump_mode = SmallJumpMode::gaussian;
  CutoffMode cutoff_mode = CutoffMode::absolute;
  double eps_ext = 1e-8;
  // Second, higher extinction level whose first passage is recorded without stopping.
  // 0 disables it.
  double probe_eps = 0;
  double n_max = 1e6;
  double horizon = 1.0;
  std::uint64_t master_seed = 1;
  // Spacing of the (t, x, y) checkpoint series; 0 records none.
  double checkpoint_dt = 0;
  // Expected number of exact jumps per step is kept at or below this.
  double max_jump_mean = 0.1;
  // Steps are shortened so that drift and noise move each component by at most this
  // fraction of its current value (0 disables). Plain Euler otherwise overshoots below 0.
  double max_relative_move = 0.1;
  // Floor for the shortened step.
  double min_dt = 1e-9;
  // Stop as soon as Y is extinct instead of following X alone.
  bool stop_on_y_extinction = false;

  void check(const ModelParams& params) const;
};

enum class StopEvent { ExtinctX, ExtinctY, ExtinctBoth, Explode, HorizonEnd };
std::string to_string(StopEvent e);

struct Checkpoint {
  double t, x, y;
};

struct PathRecord {
  std::uint64_t path_id = 0;
  std::uint64_t seed = 0;
  StopEvent event = StopEvent::HorizonEnd;
  double event_time = 0;
  double terminal_x = 0;
  double terminal_y = 0;
  double sup_x = 0;
  double sup_y = 0;
  // First passage times below eps_ext and below probe_eps; +inf if not reached.
  double ext_time_x = std::numeric_limits<double>::infinity();
  double ext_time_y = std::numeric_limits<double>::infinity();
  double probe_time_x = std::numeric_limits<double>::infinity();
  double probe_time_y = std::numeric_limits<double>::infinity();
  std::uint64_t steps = 0;
  std::uint64_t clamp_count = 0;
  // Largest negative overshoot removed by clamping.
  double max_clamp = 0;
  std::vector<Checkpoint> checkpoints;
};

// Per-component random input of one step. Exact jumps are candidates (mark, size) from a
// Poisson clock at a dominating level; a component accepts a candidate iff
// mark * level_bound <= its own level.
struct StepDraws {
  double dB1 = 0, dB2 = 0;
  double small1 = 0, small2 = 0;
  double level_bound1 = 0, level_bound2 = 0;
  std::vector<std::pair<double, double>> jumps1, jumps2;
};

struct StepInfo {
  double clamp_x = 0;
  double clamp_y = 0;
};

// One Euler step of length dt_eff from (x, y). A component at 0 stays at 0.
void euler_step(const ModelParams& params, const SimConfig& cfg, double& x, double& y, double dt_eff,
                const StepDraws& draws, StepInfo* info = nullptr);

// Jump intensity level a3 x^{p3+alpha1} and the resulting exact-jump rate.
double jump_level_x(const ModelParams& params, double x);
double jump_level_y(const ModelParams& params, double y);
double exact_jump_rate(double level, double alpha, double cutoff);
double effective_cutoff(const SimConfig& cfg, double state);

// Called before each step with the pre-step state; used for path functionals.
using StepObserver = std::function<void(double t, double dt_eff, double x, double y)>;

PathRecord simulate_path(const ModelParams& params, const SimConfig& cfg, std::uint64_t path_seed,
                         const StepObserver& observer = nullptr);

// Ordering checks along a pair of coupled paths.
struct CouplingReport {
  std::uint64_t checkpoints = 0;
  std::uint64_t violations = 0;
  double max_violation = 0;
  double dt = 0;
  std::vector<bool> x_ordered;
  std::vector<bool> y_ordered;
};

// Runs (x0, y0) and (xt0, yt0) with xt0 >= x0, yt0 <= y0 on shared noise and checks
// xt >= x and yt <= y at n_checkpoints equally spaced times up to the horizon, stopping
// at the first event of either system.
CouplingReport simulate_coupled(const ModelParams& params, const SimConfig& cfg, double x0, double y0, double xt0,
                                double yt0, std::uint64_t path_seed, int n_checkpoints);

}  // namespace lvlab
