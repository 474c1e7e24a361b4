#include "lvlab/generator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lvlab/errors.hpp"

namespace lvlab {

double GeneratorTerms::magnitude() const {
  return std::abs(drift_x) + std::abs(diff_x) + std::abs(jump_x) + std::abs(drift_y) + std::abs(diff_y) +
         std::abs(jump_y) + std::abs(interaction_x) + std::abs(interaction_y);
}

double k1(const TestFunction& g, double x, double y, double z) {
  Jet j = g.jet(x, y);
  return g.jet(x + z, y).value - j.value - j.dx * z;
}

double k2(const TestFunction& g, double x, double y, double z) {
  Jet j = g.jet(x, y);
  return g.jet(x, y + z).value - j.value - j.dy * z;
}

double jump_integral(const TestFunction& g, double x, double y, Axis axis, const StableMeasure& m,
                     const QuadratureConfig& cfg, double log_ref) {
  const Jet base = g.jet(x, y, log_ref);
  JumpIntegrand f;
  f.tail_growth = g.tail_growth(axis);
  if (axis == Axis::first) {
    f.second_derivative_at_shift = [&](double w) { return g.jet(x + w, y, log_ref).dxx; };
    f.remainder = [&](double z) { return g.jet(x + z, y, log_ref).value - base.value - base.dx * z; };
  } else {
    f.second_derivative_at_shift = [&](double w) { return g.jet(x, y + w, log_ref).dyy; };
    f.remainder = [&](double z) { return g.jet(x, y + z, log_ref).value - base.value - base.dy * z; };
  }
  return integrate_against_stable(m, f, cfg);
}

double jump_integral(const Profile& p, double t, const StableMeasure& m, const QuadratureConfig& cfg,
                     double log_ref) {
  const Jet1 base = p.jet(t, log_ref);
  JumpIntegrand f;
  f.second_derivative_at_shift = [&](double w) { return p.jet(t + w, log_ref).d2; };
  f.remainder = [&](double z) { return p.jet(t + z, log_ref).value - base.value - base.d1 * z; };
  return integrate_against_stable(m, f, cfg);
}

double relative_jump_integral(const Profile& f, double t, const StableMeasure& m, const QuadratureConfig& cfg) {
  const double end = f.support_end();
  const double l0 = f.log_value(t);
  if (!std::isfinite(end) || !(t < end) || !std::isfinite(l0)) {
    throw DomainError("relative jump integral needs a finite support end beyond a positive point");
  }
  const double alpha = m.alpha;
  double r1, r2;
  f.relative_derivatives(t, r1, r2);
  const double reach = end - t;

  // Near zero the remainder is z^2 int_0^1 f''(t+zv)/f(t) (1-v) dv; swapping the order turns
  // the (0, zm) piece into int_0^zm f''(t+w)/f(t) k(w) dw with k in closed form. Beyond zm
  // the remainder itself is integrated, and past the support end only -1 - r1 z is left.
  const double scale = std::min(reach, 1.0 / (std::abs(r1) + std::sqrt(std::abs(r2)) + 1e-300));
  const double zm = 0.1 * scale;
  const double tail = -std::pow(reach, -alpha) / alpha - r1 * std::pow(reach, 1 - alpha) / (alpha - 1);

  auto log_ratio = [&](double z) { return f.log_ratio(t, z); };
  auto kernel = [&](double w) {
    return std::pow(w, 1 - alpha) * (1 / (alpha - 1) - 1 / alpha) - std::pow(zm, 1 - alpha) / (alpha - 1) +
           w * std::pow(zm, -alpha) / alpha;
  };
  // In s = ln w both pieces are smooth; the near piece decays like w^{2-alpha} as s -> -inf.
  auto near = [&](double s) {
    const double w = std::exp(s);
    double q1, q2;
    f.relative_derivatives(t + w, q1, q2);
    return q2 * std::exp(log_ratio(w)) * kernel(w) * w;
  };
  auto far = [&](double s) {
    const double z = std::exp(s);
    const double l = log_ratio(z);
    const double jump = l == -std::numeric_limits<double>::infinity() ? -1.0 : std::expm1(l);
    return (jump - r1 * z) * std::exp(-alpha * s);
  };

  const double depth = 40.0;
  const double n0 = std::log(zm) - depth;
  const double below = 0.5 * r2 * std::pow(std::exp(n0), 2 - alpha) / ((2 - alpha) * alpha * (alpha - 1));
  const double s0 = std::log(zm), s1 = std::log(reach);

  const int scan = 512;
  double peak = -std::numeric_limits<double>::infinity();
  double peak_s = s0;
  double size = std::abs(near(s0)) * depth;
  for (int i = 0; i <= scan; ++i) {
    const double s = s0 + (s1 - s0) * i / scan;
    const double l = log_ratio(std::exp(s));
    if (l > peak) {
      peak = l;
      peak_s = s;
    }
    if (l <= 700) size = std::max(size, std::abs(far(s)) * (s1 - s0));
  }
  if (peak > 700) return std::numeric_limits<double>::infinity();

  const int pieces = 16;
  std::vector<double> cuts;
  for (int i = 0; i <= pieces; ++i) cuts.push_back(s0 + (s1 - s0) * i / pieces);
  cuts.push_back(peak_s);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // Tolerances are set against the overall size so near-empty pieces do not stall.
  // Steep profiles near their support end can stall at 1e-10; 1e-8 and 1e-6 are the fallbacks.
  for (double rel : {1e-10, 1e-8, 1e-6}) {
    const double tol = std::max(cfg.abs_tol, rel * size) / pieces;
    try {
      double body = adaptive_integrate(near, n0, s0, tol, rel, cfg.max_refinement_depth, cfg.max_intervals).value;
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (!(cuts[i + 1] > cuts[i])) continue;
        body += adaptive_integrate(far, cuts[i], cuts[i + 1], tol, rel, cfg.max_refinement_depth, cfg.max_intervals)
                    .value;
      }
      return m.c_alpha * (below + body + tail);
    } catch (const NonConvergent&) {
      if (rel >= 1e-6) throw;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

GeneratorTerms apply_generator(const ModelParams& m, const TestFunction& g, double x, double y,
                               const QuadratureConfig& cfg, double log_ref, JumpSource source,
                               const JumpValues* supplied) {
  if (!(x > 0 && y > 0)) throw DomainError("generator needs x, y > 0");
  const Jet j = g.jet(x, y, log_ref);
  GeneratorTerms t;
  if (m.a1 != 0) t.drift_x = -m.a1 * std::pow(x, m.p1 + 1) * j.dx;
  if (m.a2 != 0) t.diff_x = m.a2 * std::pow(x, m.p2 + 2) * j.dxx;
  if (m.b1 != 0) t.drift_y = -m.b1 * std::pow(y, m.q1 + 1) * j.dy;
  if (m.b2 != 0) t.diff_y = m.b2 * std::pow(y, m.q2 + 2) * j.dyy;
  if (m.eta1 != 0) t.interaction_x = -m.eta1 * std::pow(x, m.theta1) * std::pow(y, m.kappa1) * j.dx;
  if (m.eta2 != 0) t.interaction_y = -m.eta2 * std::pow(y, m.theta2) * std::pow(x, m.kappa2) * j.dy;

  if (m.a3 != 0 || m.b3 != 0) {
    const StableMeasure m1 = make_stable_measure(m.alpha1);
    const StableMeasure m2 = make_stable_measure(m.alpha2);
    std::optional<std::pair<double, double>> closed;
    if (source == JumpSource::closed_form_if_available) closed = g.closed_jump_integrals(x, y, m1, m2);
    const double scale = std::exp(-log_ref);
    if (m.a3 != 0) {
      double J;
      if (supplied && supplied->first) {
        J = *supplied->first;
      } else if (closed) {
        J = closed->first * scale;
      } else {
        J = jump_integral(g, x, y, Axis::first, m1, cfg, log_ref);
      }
      t.jump_x = m.a3 * std::pow(x, m.p3 + m.alpha1) * J;
    }
    if (m.b3 != 0) {
      double J;
      if (supplied && supplied->second) {
        J = *supplied->second;
      } else if (closed) {
        J = closed->second * scale;
      } else {
        J = jump_integral(g, x, y, Axis::second, m2, cfg, log_ref);
      }
      t.jump_y = m.b3 * std::pow(y, m.q3 + m.alpha2) * J;
    }
  }

  t.total = t.drift_x;
  t.total += t.diff_x;
  t.total += t.jump_x;
  t.total += t.drift_y;
  t.total += t.diff_y;
  t.total += t.jump_y;
  t.total += t.interaction_x;
  t.total += t.interaction_y;
  return t;
}

GeneratorTerms apply_generator_relative(const ModelParams& params, const TestFunction& g, double x, double y,
                                        const QuadratureConfig& cfg, JumpSource source,
                                        const JumpValues* supplied) {
  const double lv = g.log_value(x, y);
  if (!std::isfinite(lv)) throw DomainError("relative generator needs g > 0 at the evaluation point");
  return apply_generator(params, g, x, y, cfg, lv, source, supplied);
}

}  // namespace lvlab
