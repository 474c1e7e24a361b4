#pragma once

#include <functional>

#include "lvlab/stable_measure.hpp"

namespace lvlab {

struct QuadratureConfig {
  double split_point = 1.0;
  double abs_tol = 1e-10;
  // Floor relative to the running integral; only matters when |I| is large.
  double rel_tol = 1e-13;
  int max_refinement_depth = 40;
  int max_intervals = 4000;
  bool growth_screening = true;

  void check() const;
};

// Globally adaptive 15-point Gauss-Kronrod on a finite interval.
// Throws NonConvergent when the tolerance cannot be met within the depth limit.
struct QuadResult {
  double value = 0;
  double error = 0;
  int intervals = 0;
};
QuadResult adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                              double abs_tol, double rel_tol, int max_depth, int max_intervals);

// Adaptive 16-node Gauss-Legendre for smooth integrands on [a,b].
double adaptive_gauss_legendre(const std::function<double(double)>& f, double a, double b,
                               double abs_tol, int max_depth = 14);

// A jump remainder z -> g(x+z) - g(x) - g'(x) z along one axis, with the second
// derivative along that axis available at shifted points x + w.
struct JumpIntegrand {
  std::function<double(double)> second_derivative_at_shift;
  std::function<double(double)> remainder;
  // Power of z the remainder grows like at infinity; sets the tail substitution.
  double tail_growth = 1.0;
};

// integral over (0, inf) of remainder(z) mu(dz). Near zero the remainder is evaluated
// as z^2 * int_0^1 g''(x+zv)(1-v) dv.
double integrate_against_stable(const StableMeasure& m, const JumpIntegrand& f,
                                const QuadratureConfig& cfg);

}  // namespace lvlab
