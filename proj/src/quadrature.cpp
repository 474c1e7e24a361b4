#include "lvlab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <queue>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lvlab/errors.hpp"

namespace lvlab {

namespace {

using GK15 = boost::math::quadrature::gauss_kronrod<double, 15>;
using G7 = boost::math::quadrature::gauss<double, 7>;
using GL16 = boost::math::quadrature::gauss<double, 16>;

struct Panel {
  double a, b;
  double value, error;
  int depth;
  bool operator<(const Panel& o) const { return error < o.error; }
};

// Kronrod abscissae are stored ascending from 0; even indices are the Gauss nodes.
Panel gk15(const std::function<double(double)>& f, double a, double b, int depth) {
  const auto& xk = GK15::abscissa();
  const auto& wk = GK15::weights();
  const auto& wg = G7::weights();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double f0 = f(mid);
  double k = f0 * wk[0];
  double g = f0 * wg[0];
  for (std::size_t i = 1; i < xk.size(); ++i) {
    double s = f(mid + half * xk[i]) + f(mid - half * xk[i]);
    k += s * wk[i];
    if (i % 2 == 0) g += s * wg[i / 2];
  }
  Panel p{a, b, k * half, std::abs(k - g) * half, depth};
  if (!std::isfinite(p.value) || !std::isfinite(p.error)) p.error = std::numeric_limits<double>::infinity();
  return p;
}

double gl16(const std::function<double(double)>& f, double a, double b) {
  const auto& x = GL16::abscissa();
  const auto& w = GL16::weights();
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += w[i] * (f(mid + half * x[i]) + f(mid - half * x[i]));
  }
  return s * half;
}

double gl_recurse(const std::function<double(double)>& f, double a, double b, double whole,
                  double abs_tol, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = gl16(f, a, mid);
  const double right = gl16(f, mid, b);
  const double sum = left + right;
  if (!std::isfinite(sum)) return sum;
  const double tol = std::max(abs_tol, 1e-14 * std::abs(sum));
  if (std::abs(sum - whole) <= tol || depth <= 0) return sum;
  return gl_recurse(f, a, mid, left, 0.5 * abs_tol, depth - 1) +
         gl_recurse(f, mid, b, right, 0.5 * abs_tol, depth - 1);
}

}  // namespace

void QuadratureConfig::check() const {
  if (!(split_point > 0)) throw ConfigError("quadrature split_point must be positive");
  if (!(abs_tol > 0)) throw ConfigError("quadrature abs_tol must be positive");
  if (max_refinement_depth <= 0) throw ConfigError("quadrature max_refinement_depth must be positive");
}

QuadResult adaptive_integrate(const std::function<double(double)>& f, double a, double b,
                              double abs_tol, double rel_tol, int max_depth, int max_intervals) {
  std::priority_queue<Panel> heap;
  heap.push(gk15(f, a, b, 0));
  double total = heap.top().value;
  double err = heap.top().error;
  int count = 1;
  while (true) {
    const double tol = std::max(abs_tol, rel_tol * std::abs(total));
    if (err <= tol) break;
    Panel worst = heap.top();
    if (std::isnan(worst.value)) {
      throw DomainError("integrand is undefined on [" + std::to_string(worst.a) + ", " +
                        std::to_string(worst.b) + "]");
    }
    if (std::isinf(worst.value)) {
      // The integrand left the double range: the integral itself is infinite there.
      return {worst.value, 0.0, count};
    }
    if (worst.depth >= max_depth || count >= max_intervals) {
      throw NonConvergent("adaptive quadrature stalled: error " + std::to_string(err) +
                          " above tolerance " + std::to_string(tol));
    }
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    Panel l = gk15(f, worst.a, mid, worst.depth + 1);
    Panel r = gk15(f, mid, worst.b, worst.depth + 1);
    heap.push(l);
    heap.push(r);
    ++count;
    total += l.value + r.value - worst.value;
    err += l.error + r.error - worst.error;
    if (err <= std::max(abs_tol, rel_tol * std::abs(total)) || count % 64 == 0) {
      // Re-sum from the panels so rounding in the running totals cannot end the loop.
      total = 0;
      err = 0;
      auto copy = heap;
      while (!copy.empty()) {
        total += copy.top().value;
        err += copy.top().error;
        copy.pop();
      }
    }
  }
  return {total, err, count};
}

double adaptive_gauss_legendre(const std::function<double(double)>& f, double a, double b,
                               double abs_tol, int max_depth) {
  return gl_recurse(f, a, b, gl16(f, a, b), abs_tol, max_depth);
}

double integrate_against_stable(const StableMeasure& m, const JumpIntegrand& f,
                                const QuadratureConfig& cfg) {
  cfg.check();
  const double alpha = m.alpha;
  const double s = cfg.split_point;
  const double tol = 0.5 * cfg.abs_tol / m.c_alpha;

  if (cfg.growth_screening) {
    const double z1 = 1e3, z2 = 1e6;
    double k0 = f.remainder(10.0);
    double k1 = f.remainder(z1);
    double k2 = f.remainder(z2);
    if (std::isnan(k0) || std::isnan(k1) || std::isnan(k2)) {
      throw DomainError("jump remainder undefined at large jump sizes");
    }
    if (std::isinf(k2) || std::isinf(k1)) {
      throw NonConvergent("jump remainder overflows at large jump sizes");
    }
    // Two slope estimates ending at 1e6; a sign change of the remainder near one of the
    // earlier points inflates only that estimate, so take the smaller.
    double growth = std::numeric_limits<double>::infinity();
    bool measured = false;
    for (auto [z, k] : {std::pair{z1, k1}, std::pair{10.0, k0}}) {
      if (std::abs(k2) > 0 && std::abs(k) > 0) {
        growth = std::min(growth, std::log(std::abs(k2) / std::abs(k)) / std::log(z2 / z));
        measured = true;
      }
    }
    // A declared super-linear growth gets slack: secants over [1e3, 1e6] overstate slowly
    // converging powers such as z((1+z)^b - 1) with small b. Integrability of the declared
    // power is checked below.
    const bool declared = f.tail_growth > 1;
    const bool too_fast = declared ? growth > f.tail_growth + 0.25 : (growth > 1.25 || growth >= alpha - 1e-3);
    if (measured && too_fast) {
      throw NonConvergent("jump remainder grows like z^" + std::to_string(growth) +
                          ", not integrable against the stable tail");
    }
  }

  // Near part, z = s t^{1/(2-alpha)}: z^{1-alpha} dz = s^{2-alpha}/(2-alpha) dt.
  const double e_near = 1.0 / (2.0 - alpha);
  auto near = [&](double t) -> double {
    if (t <= 0) return 0.5 * f.second_derivative_at_shift(0.0);
    const double z = s * std::pow(t, e_near);
    auto inner = [&](double v) { return f.second_derivative_at_shift(z * v) * (1.0 - v); };
    double taylor = adaptive_gauss_legendre(inner, 0.0, 1.0, 1e-3 * tol);
    if (std::isfinite(taylor)) return taylor;
    // Overflow in the curvature: fall back to the direct remainder.
    double direct = f.remainder(z) / (z * z);
    if (std::isnan(direct)) throw DomainError("jump remainder undefined");
    return direct;
  };
  const double near_scale = std::pow(s, 2.0 - alpha) / (2.0 - alpha);

  // Tail, z = s u^{-1/(alpha-nu)} with nu the growth power:
  // z^{-1-alpha} dz = s^{-alpha}/(alpha-nu) u^{alpha/(alpha-nu)-1} du, which cancels z^nu.
  const double nu = f.tail_growth;
  if (!(nu < alpha)) throw NonConvergent("declared tail growth is not integrable");
  const double e_tail = 1.0 / (alpha - nu);
  const double e_weight = alpha / (alpha - nu) - 1.0;
  auto tail = [&](double u) -> double {
    if (u <= 0) return 0.0;
    const double z = s * std::pow(u, -e_tail);
    if (!std::isfinite(z)) return 0.0;
    double k = f.remainder(z);
    if (std::isnan(k)) throw DomainError("jump remainder undefined at z = " + std::to_string(z));
    return k * std::pow(u, e_weight);
  };
  const double tail_scale = std::pow(s, -alpha) / (alpha - nu);

  auto rn = adaptive_integrate(near, 0.0, 1.0, tol / near_scale, cfg.rel_tol, cfg.max_refinement_depth,
                               cfg.max_intervals);
  auto rt = adaptive_integrate(tail, 0.0, 1.0, tol / tail_scale, cfg.rel_tol, cfg.max_refinement_depth,
                               cfg.max_intervals);
  double total = near_scale * rn.value + tail_scale * rt.value;
  if (std::isinf(total) && total > 0) return total;
  if (!std::isfinite(total)) throw DomainError("jump integral is not finite");
  return m.c_alpha * total;
}

}  // namespace lvlab
