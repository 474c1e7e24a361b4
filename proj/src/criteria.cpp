#include "lvlab/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "lvlab/parallel.hpp"
#include "lvlab/rng.hpp"
#include "lvlab/stable_measure.hpp"

namespace lvlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTie = 1e-12;

using Points = std::vector<std::pair<double, double>>;
using MarginFn = std::function<double(double, double)>;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

GridCertificate run_grid(GridCertificate cert, const Points& pts, const MarginFn& margin, const CriteriaOptions& opts) {
  std::vector<double> m(pts.size());
  parallel_for(pts.size(), opts.workers, [&](std::size_t i) {
    const double v = margin(pts[i].first, pts[i].second);
    m[i] = std::isnan(v) ? -kInf : v;
  });
  cert.nodes = pts.size();
  cert.violations = 0;
  cert.worst_margin = kInf;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (m[i] <= 0) ++cert.violations;
    if (m[i] < cert.worst_margin) {
      cert.worst_margin = m[i];
      cert.worst_c1 = pts[i].first;
      cert.worst_c2 = pts[i].second;
    }
    if (opts.keep_nodes) cert.dump.push_back({pts[i].first, pts[i].second, m[i]});
  }
  if (pts.empty()) cert.worst_margin = -kInf;
  cert.pass = !pts.empty() && cert.worst_margin > 0;
  return cert;
}

Points product(const std::vector<double>& a, const std::vector<double>& b) {
  Points pts;
  pts.reserve(a.size() * b.size());
  for (double u : a)
    for (double v : b) pts.emplace_back(u, v);
  return pts;
}

// Signed sum of exp(log_abs) terms over the sum of their absolute values.
struct LogTerm {
  double sign;
  double log_abs;
};

double log_terms_margin(const std::vector<LogTerm>& terms) {
  double top = -kInf;
  for (const auto& t : terms) top = std::max(top, t.log_abs);
  if (top == -kInf) return 0.0;
  double num = 0, den = 0;
  for (const auto& t : terms) {
    const double w = std::exp(t.log_abs - top);
    num += t.sign * w;
    den += w;
  }
  return num / den;
}

bool same(double a, double b) { return std::abs(a - b) <= kTie; }

// (log x, log u) nodes on {x <= eps, u >= u_lo, u x^beta <= eps}.
Points ratio_region(double log_eps, double log_u_lo, double beta, int n, double depth) {
  Points pts;
  for (int i = 0; i < n; ++i) {
    const double lx = log_eps - depth * (1.0 - static_cast<double>(i) / (n - 1));
    const double hi = log_eps - beta * lx;
    if (hi < log_u_lo) continue;
    for (int j = 0; j < n; ++j) pts.emplace_back(lx, log_u_lo + (hi - log_u_lo) * j / (n - 1));
  }
  return pts;
}

std::vector<double> log_eps_ladder() {
  std::vector<double> out;
  for (double e : {0.5, 1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8, 1e-12, 1e-16, 1e-24, 1e-32, 1e-48, 1e-64, 1e-96, 1e-128,
                   1e-192, 1e-256})
    out.push_back(std::log(e));
  return out;
}

// Golden-section maximization of f on [a, b].
double golden_max(const std::function<double(double)>& f, double a, double b, int iters) {
  const double phi = 0.5 * (std::sqrt(5.0) - 1);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int k = 0; k < iters; ++k) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? c : d;
}

void keep_best(GridCertificate& best, const GridCertificate& c) {
  if (best.nodes == 0 || c.worst_margin > best.worst_margin) best = c;
}

[[noreturn]] void fail_search(const std::string& what, GridCertificate best) {
  if (best.check.empty()) best.check = what;
  best.pass = false;
  throw SearchFailed(what, std::move(best));
}

}  // namespace

double constant(const ConstantsFound& c, const std::string& name) {
  for (const auto& [k, v] : c)
    if (k == name) return v;
  throw ConfigError("no constant named '" + name + "'");
}

std::string to_string(Direction d) { return d == Direction::at_most ? "<=" : ">="; }

std::string to_string(Subcase s) {
  switch (s) {
    case Subcase::iia: return "iia";
    case Subcase::iib: return "iib";
    case Subcase::iic: return "iic";
    case Subcase::iid: return "iid";
    case Subcase::iiia: return "iiia";
    case Subcase::iiib: return "iiib";
  }
  return "?";
}

Subcase subcase_from_string(const std::string& s) {
  for (auto c : {Subcase::iia, Subcase::iib, Subcase::iic, Subcase::iid, Subcase::iiia, Subcase::iiib})
    if (to_string(c) == s) return c;
  throw ConfigError("unknown subcase '" + s + "'");
}

std::string classifier_tag(Subcase s) {
  switch (s) {
    case Subcase::iia: return "partial(a)";
    case Subcase::iib: return "partial(b)";
    case Subcase::iic: return "partial(c)";
    case Subcase::iid: return "partial(d)";
    case Subcase::iiia: return "sure(a)";
    case Subcase::iiib: return "sure(b)";
  }
  return "?";
}

std::vector<double> grid_nodes(double lo, double hi, int n, Spacing spacing) {
  if (n < 1 || !(hi > lo)) throw ConfigError("grid needs n >= 1 and hi > lo");
  std::vector<double> out;
  if (n == 1) {
    out.push_back(spacing == Spacing::log ? std::sqrt(lo * hi) : 0.5 * (lo + hi));
    return out;
  }
  switch (spacing) {
    case Spacing::linear:
      for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * i / (n - 1));
      break;
    case Spacing::log: {
      if (!(lo > 0)) throw ConfigError("log grid needs lo > 0");
      const double a = std::log(lo), b = std::log(hi);
      for (int i = 0; i < n; ++i) out.push_back(std::exp(a + (b - a) * i / (n - 1)));
      break;
    }
    case Spacing::both_ends: {
      // A quarter of the nodes per end, geometric down to 1e-6 of the width; the rest linear.
      const int ends = std::max(1, n / 4);
      const int mid = n - 2 * ends;
      std::vector<double> t;
      for (int k = 0; k < ends; ++k) {
        const double frac = ends == 1 ? 0.0 : static_cast<double>(k) / (ends - 1);
        t.push_back(std::pow(10.0, -6.0 + 4.7 * frac));
      }
      for (double v : t) out.push_back(lo + (hi - lo) * v);
      for (int k = 1; k <= mid; ++k) out.push_back(lo + (hi - lo) * (0.05 + 0.9 * k / (mid + 1.0)));
      for (double v : t) out.push_back(hi - (hi - lo) * v);
      std::sort(out.begin(), out.end());
      break;
    }
  }
  return out;
}

double normalized_margin(double diff, double scale) {
  if (std::isnan(diff)) return diff;
  if (std::isinf(diff)) return diff > 0 ? 1.0 : -1.0;
  if (!(scale > 0) || std::isinf(scale)) return diff > 0 ? 1.0 : (diff < 0 ? -1.0 : 0.0);
  return diff / scale;
}

GeneratorTerms relative_generator(const ModelParams& params, const TestFunction& g, double x, double y,
                                  const QuadratureConfig& quad) {
  JumpValues supplied;
  auto compact = [](const Profile* f) { return f && std::isfinite(f->support_end()); };
  if (params.a3 != 0 && compact(g.factor(Axis::first))) {
    supplied.first = relative_jump_integral(*g.factor(Axis::first), x, make_stable_measure(params.alpha1), quad);
  }
  if (params.b3 != 0 && compact(g.factor(Axis::second))) {
    supplied.second = relative_jump_integral(*g.factor(Axis::second), y, make_stable_measure(params.alpha2), quad);
  }
  return apply_generator_relative(params, g, x, y, quad, JumpSource::closed_form_if_available, &supplied);
}

// ---------------------------------------------------------------- generator bounds

namespace {

using Axes = std::pair<std::vector<double>, std::vector<double>>;

// Lg/g terms on the product grid, x-major. Jump integrals of compact separable factors
// depend on one coordinate only and are computed once per axis node.
std::vector<GeneratorTerms> product_terms(const ModelParams& params, const TestFunction& g, const Axes& axes,
                                          const CriteriaOptions& opts) {
  const auto& [xs, ys] = axes;
  auto compact = [](const Profile* f) { return f && std::isfinite(f->support_end()) ? f : nullptr; };
  const Profile* fx = params.a3 != 0 ? compact(g.factor(Axis::first)) : nullptr;
  const Profile* fy = params.b3 != 0 ? compact(g.factor(Axis::second)) : nullptr;
  std::vector<double> jx(fx ? xs.size() : 0), jy(fy ? ys.size() : 0);
  const StableMeasure m1 = make_stable_measure(params.alpha1), m2 = make_stable_measure(params.alpha2);
  parallel_for(jx.size(), opts.workers, [&](std::size_t i) { jx[i] = relative_jump_integral(*fx, xs[i], m1, opts.quad); });
  parallel_for(jy.size(), opts.workers, [&](std::size_t j) { jy[j] = relative_jump_integral(*fy, ys[j], m2, opts.quad); });
  std::vector<GeneratorTerms> out(xs.size() * ys.size());
  parallel_for(out.size(), opts.workers, [&](std::size_t k) {
    const std::size_t i = k / ys.size(), j = k % ys.size();
    JumpValues supplied;
    if (fx) supplied.first = jx[i];
    if (fy) supplied.second = jy[j];
    out[k] = apply_generator_relative(params, g, xs[i], ys[j], opts.quad, JumpSource::closed_form_if_available,
                                      &supplied);
  });
  return out;
}

GridCertificate grade_product(GridCertificate cert, const Axes& axes, const std::vector<GeneratorTerms>& terms,
                              const std::function<double(const GeneratorTerms&)>& margin, bool keep) {
  const auto& [xs, ys] = axes;
  cert.nodes = terms.size();
  cert.violations = 0;
  cert.worst_margin = terms.empty() ? -kInf : kInf;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    double m = margin(terms[k]);
    if (std::isnan(m)) m = -kInf;
    const double x = xs[k / ys.size()], y = ys[k % ys.size()];
    if (m <= 0) ++cert.violations;
    if (m < cert.worst_margin) {
      cert.worst_margin = m;
      cert.worst_c1 = x;
      cert.worst_c2 = y;
    }
    if (keep) cert.dump.push_back({x, y, m});
  }
  cert.pass = !terms.empty() && cert.worst_margin > 0;
  return cert;
}

double min_total(const std::vector<GeneratorTerms>& terms) {
  double lo = kInf;
  for (const auto& t : terms) lo = std::min(lo, std::isnan(t.total) ? -kInf : t.total);
  return lo;
}

}  // namespace

GridCertificate check_generator_bound(const ModelParams& params, const TestFunction& g, const GridBox& box,
                                      Direction direction, double d, const CriteriaOptions& opts) {
  GridCertificate cert;
  cert.check = "Lg " + to_string(direction) + " d g, g = " + g.describe() + ", d = " + fmt(d);
  cert.region = "[" + fmt(box.x_lo) + "," + fmt(box.x_hi) + "] x [" + fmt(box.y_lo) + "," + fmt(box.y_hi) + "]";
  cert.resolution = opts.resolution;
  const Axes axes{grid_nodes(box.x_lo, box.x_hi, opts.resolution, box.x_spacing),
                  grid_nodes(box.y_lo, box.y_hi, opts.resolution, box.y_spacing)};
  for (double x : axes.first) {
    for (double y : axes.second) {
      if (!std::isfinite(g.log_value(x, y))) {
        throw PreconditionError("test function vanishes at (" + fmt(x) + ", " + fmt(y) + ") inside the box");
      }
    }
  }
  cert = grade_product(cert, axes, product_terms(params, g, axes, opts), [&](const GeneratorTerms& t) {
    const double diff = direction == Direction::at_most ? d - t.total : t.total - d;
    return normalized_margin(diff, std::abs(d) + t.magnitude()) + kTie;
  }, opts.keep_nodes);
  cert.notes.push_back("non-strict bound: margins carry a 1e-12 allowance for ties");
  return cert;
}

LogXBound log_x_bound(const ModelParams& params, double n, const QuadratureConfig& quad) {
  if (!(n >= 1)) throw ConfigError("log_x bound needs n >= 1");
  const StableMeasure m = make_stable_measure(params.alpha1);
  const double a = m.alpha;
  LogXBound out;
  out.n = n;
  // z = e^s turns z^2 (1+z)^-2 z^{-1-a} dz into e^{(2-a)s} (1+e^s)^-2 ds.
  auto small = [&](double s) { return std::exp((2 - a) * s) / std::pow(1 + std::exp(s), 2); };
  out.c_small = m.c_alpha * adaptive_integrate(small, -200.0, 200.0, 1e-13, 1e-12, quad.max_refinement_depth,
                                                quad.max_intervals).value;
  const auto g = make_log_x(n);
  double sup_dxx = 0, sup_g = 0;
  for (double v : grid_nodes(0.5, n + 1, 4001, Spacing::linear)) {
    const Jet j = g->jet(v, 1.0);
    sup_dxx = std::max(sup_dxx, std::abs(j.dxx));
    sup_g = std::max(sup_g, std::abs(j.value));
  }
  out.c_mid = sup_dxx * truncated_moment(m, 2, 0.0, n + 1);
  out.c_large = sup_g * tail_mass(m, 0.5) / 2 + truncated_moment(m, 1, 0.5, n + 1);
  const auto& p = params;
  out.d = p.eta1 * std::pow(n, p.theta1 - 1 + p.kappa1) + p.a1 * std::pow(n, p.p1) + p.a2 * std::pow(n, p.p2) +
          p.a3 * (out.c_small * std::pow(n, -a) + out.c_large / n + out.c_mid) * std::pow(n, p.p3 + a);
  return out;
}

GridCertificate check_log_x_bound(const ModelParams& params, double n, const CriteriaOptions& opts) {
  const LogXBound b = log_x_bound(params, n, opts.quad);
  const auto g = make_log_x(n);
  const double lo = n * std::exp(-std::min(opts.log_depth, 18.0));
  GridBox box{lo, n, lo, n, Spacing::log, Spacing::log};
  GridCertificate cert = check_generator_bound(params, *g, box, Direction::at_most, b.d, opts);
  cert.notes.push_back("d_n = " + fmt(b.d) + " from integral constants " + fmt(b.c_small) + ", " + fmt(b.c_mid) +
                       ", " + fmt(b.c_large));
  return cert;
}

// ---------------------------------------------------------------- exp_tan

namespace {

// Lg >= d g on region(n) with d half the minimum of Lg/g at the working resolution.
// False when that minimum is not positive.
bool certify_ratio_floor(const ModelParams& params, const TestFunction& g, const std::function<Axes(int)>& region,
                         const std::string& region_text, const CriteriaOptions& opts, CertifiedConstants& out,
                         double& d) {
  const Axes axes = region(opts.resolution);
  const auto terms = product_terms(params, g, axes, opts);
  const double lo = min_total(terms);
  if (!(lo > 0)) return false;
  d = 0.5 * lo;
  auto margin = [&](const GeneratorTerms& t) { return normalized_margin(t.total - d, d + t.magnitude()); };
  GridCertificate c;
  c.check = "Lg >= d g, g = " + g.describe() + ", d = " + fmt(d);
  c.region = region_text;
  c.resolution = opts.resolution;
  out.certificate = grade_product(c, axes, terms, margin, opts.keep_nodes);
  c.resolution = 2 * opts.resolution;
  const Axes fine = region(2 * opts.resolution);
  out.refined = grade_product(c, fine, product_terms(params, g, fine, opts), margin, opts.keep_nodes);
  return true;
}

}  // namespace

CertifiedConstants check_exp_tan(const ModelParams& params, const CriteriaOptions& opts) {
  if (!(params.theta2 < 1)) throw PreconditionError("exp_tan needs theta2 < 1");
  const auto dx = derived_exponents(params);
  ExpTanShape shape;
  shape.rho = 0.5 * (1 - params.theta2);
  shape.delta = std::max({params.theta1 - 1, dx.p + 1 - params.theta1, 1.0}) + 0.5;

  auto region = [&](int n) -> Axes {
    return {grid_nodes(0, 1, n, Spacing::both_ends), grid_nodes(0, 1, n, Spacing::both_ends)};
  };

  // At the x-maximum of g the x-part of Lg/g is at most zero and only the y-part can make up
  // for it, so flat x weights and steep y weights are tried first.
  const Axes coarse = region(24);
  GridCertificate best;
  best.check = "Lg >= d g for exp_tan";
  best.region = "(0,1)^2";
  best.resolution = 24;
  best.nodes = 24 * 24;
  int tried = 0;
  for (double l1 = 2; l1 <= 1024 && tried < 8; l1 *= 2) {
    for (double l2 = 1024; l2 >= 2 && tried < 8; l2 /= 2) {
      ExpTanShape s = shape;
      s.lambda1 = l1;
      s.lambda2 = l2;
      const auto g = make_exp_tan(s, &params);
      const double lo = min_total(product_terms(params, *g, coarse, opts));
      if (best.resolution == 24) best.worst_margin = std::max(best.worst_margin, lo);
      if (!(lo > 0)) continue;
      ++tried;
      CertifiedConstants out;
      double d = 0;
      if (!certify_ratio_floor(params, *g, region, "(0,1)^2, nodes clustered at both ends", opts, out, d)) continue;
      keep_best(best, out.certificate);
      if (!out.pass()) continue;
      out.constants = {{"lambda1", s.lambda1}, {"lambda2", s.lambda2}, {"rho", s.rho}, {"delta", s.delta}, {"d", d}};
      return out;
    }
  }
  fail_search("no exp_tan weights certified Lg >= d g with d > 0", best);
}

// ---------------------------------------------------------------- perturbed balance (partial regime)

namespace {

std::vector<LogTerm> htilde_terms(const ModelParams& m, const DerivedExponents& dx, const ConstantsFound& c,
                                  double lx, double ly) {
  const double beta = constant(c, "beta"), delta = constant(c, "delta"), rho = constant(c, "rho"),
               sigma = constant(c, "sigma");
  const double lead = beta * delta * lx - delta * ly;
  std::vector<LogTerm> t;
  auto add = [&](double coef, double log_rest) {
    if (coef != 0) t.push_back({coef > 0 ? 1.0 : -1.0, std::log(std::abs(coef)) + log_rest});
  };
  add(delta * beta * dx.a * (1 - sigma), lead + dx.p * lx);
  add(-delta * (1 + sigma) * dx.b, lead + dx.q * ly);
  add(delta * beta * m.eta1, lead + (m.theta1 - 1) * lx + m.kappa1 * ly);
  add(-delta * m.eta2, lead + (m.theta2 - 1) * ly + m.kappa2 * lx);
  add(dx.b * rho * (1 - sigma), (rho + dx.q) * ly);
  add(rho * m.eta2, (rho + m.theta2 - 1) * ly + m.kappa2 * lx);
  return t;
}

double gamma_ratio(double alpha, double s) { return std::tgamma(alpha + s) / (std::tgamma(alpha) * std::tgamma(2 + s)); }

}  // namespace

double htilde_value(const ModelParams& params, const ConstantsFound& c, double x, double y) {
  const auto t = htilde_terms(params, derived_exponents(params), c, std::log(x), std::log(y));
  double v = 0;
  for (const auto& term : t) v += term.sign * std::exp(term.log_abs);
  return v;
}

CertifiedConstants check_htilde_positivity(const ModelParams& m, Subcase subcase, const CriteriaOptions& opts) {
  if (subcase == Subcase::iiia || subcase == Subcase::iiib) throw ConfigError("not a partial-regime subcase");
  const auto dx = derived_exponents(m);
  const double p = dx.p, q = dx.q, a = dx.a, b = dx.b;
  const double t1 = m.theta1, t2 = m.theta2, k1 = m.kappa1, k2 = m.kappa2;
  const std::string name = to_string(subcase);
  GridCertificate empty;
  empty.check = "perturbed balance > 0 (" + name + ")";
  if (!(t1 >= 1 - kTie && t2 < 1)) fail_search(name + ": needs theta1 >= 1 and theta2 < 1", empty);

  // Admissible interval for beta and the exponent the y^q term must beat.
  double lo = 0, hi = 0, beat = 0;
  bool split = false;  // recipes that split the region at u = y^{-rho1}
  switch (subcase) {
    case Subcase::iia:
      if (!(q > 0)) fail_search(name + ": needs q > 0", empty);
      lo = p / q;
      hi = (k2 - p) / (1 - t2);
      beat = p;
      split = true;
      break;
    case Subcase::iib:
      if (!(same(p, 0) && same(q, 0))) fail_search(name + ": needs p = q = 0", empty);
      lo = a > 0 ? b / a : kInf;
      hi = k2 / (1 - t2);
      break;
    case Subcase::iic:
      if (!(q > k1)) fail_search(name + ": needs q > kappa1", empty);
      lo = (t1 - 1) / (q - k1);
      hi = (k2 + 1 - t1) / (k1 + 1 - t2);
      beat = t1 - 1;
      split = true;
      break;
    case Subcase::iid:
      if (!(same(t1, 1) && same(q, k1))) fail_search(name + ": needs theta1 = 1 and q = kappa1", empty);
      lo = b / m.eta1;
      hi = k2 / (k1 + 1 - t2);
      break;
    default: break;
  }
  if (!(lo < hi - kTie)) {
    fail_search(name + ": empty interval for beta (" + fmt(lo) + ", " + fmt(hi) + ")", empty);
  }
  const double beta = 0.5 * (lo + hi);
  double rho1 = 1.0;
  if (split) {
    const double e = subcase == Subcase::iic ? beat + beta * k1 : beat;
    if (e > 0) rho1 = 0.5 * (beta * q / e - 1);
  }

  double sigma = 0.05;
  if (subcase == Subcase::iib) sigma = std::min(sigma, 0.5 * (beta * a - b) / (beta * a + b));
  if (subcase == Subcase::iid) sigma = std::min(sigma, 0.5 * (beta * m.eta1 / b - 1));

  // delta and rho small enough that the full generator coefficients stay within 1 +- sigma.
  double delta = std::min(sigma / beta, sigma);
  for (int k = 0; k < 60; ++k) {
    const bool ok_x = m.a3 == 0 || (1 - beta * delta) * gamma_ratio(m.alpha1, -beta * delta) >= 1 - sigma;
    const bool ok_y = m.b3 == 0 || (1 + delta) * gamma_ratio(m.alpha2, delta) <= 1 + sigma;
    if (ok_x && ok_y) break;
    delta *= 0.5;
  }
  double rho = std::min(sigma, split ? 0.5 * rho1 * delta : 0.5);
  for (int k = 0; k < 60; ++k) {
    if (m.b3 == 0 || (1 - rho) * gamma_ratio(m.alpha2, -rho) >= 1 - sigma) break;
    rho *= 0.5;
  }

  ConstantsFound c = {{"beta", beta}, {"delta", delta}, {"rho", rho}, {"rho1", rho1},
                      {"sigma", sigma}, {"eps0", 0}, {"z_star", 0}};
  auto set = [&](const std::string& k, double v) {
    for (auto& kv : c)
      if (kv.first == k) kv.second = v;
  };

  auto certify = [&](double log_eps, double log_z, int n) {
    GridCertificate cert;
    cert.check = "perturbed balance > 0 (" + name + "), beta = " + fmt(beta);
    cert.region = "0 < x, y <= " + fmt(std::exp(log_eps)) + ", y x^-beta >= " + fmt(std::exp(log_z)) +
                  " (ln eps = " + fmt(log_eps) + ", x down to e^-" + fmt(opts.log_depth) + " eps)";
    cert.axis1 = "ln x";
    cert.axis2 = "ln u";
    cert.resolution = n;
    return run_grid(cert, ratio_region(log_eps, log_z, beta, n, opts.log_depth), [&](double lx, double lu) {
      return log_terms_margin(htilde_terms(m, dx, c, lx, lu + beta * lx));
    }, opts);
  };

  GridCertificate best;
  const int coarse = 32;
  for (double le : log_eps_ladder()) {
    for (double z : {1.0, 0.1, 10.0, 1e-2, 1e2, 1e-3, 1e3}) {
      GridCertificate cc = certify(le, std::log(z), coarse);
      keep_best(best, cc);
      if (!cc.pass) continue;
      const double lz = golden_max([&](double s) { return certify(le, s, coarse).worst_margin; },
                                   std::log(z) - std::log(10.0), std::log(z) + std::log(10.0), 20);
      const double use = certify(le, lz, coarse).pass ? lz : std::log(z);
      set("eps0", std::exp(le));
      set("z_star", std::exp(use));
      CertifiedConstants out;
      out.certificate = certify(le, use, opts.resolution);
      out.refined = certify(le, use, 2 * opts.resolution);
      keep_best(best, out.certificate);
      if (!out.pass()) continue;
      out.constants = c;
      return out;
    }
  }
  fail_search(name + ": no (eps0, z*) certified the perturbed balance", best);
}

// ---------------------------------------------------------------- H lower bound (sure regime)

CertifiedConstants check_H_lower_bound(const ModelParams& m, Subcase subcase, const CriteriaOptions& opts) {
  if (subcase != Subcase::iiia && subcase != Subcase::iiib) throw ConfigError("not a sure-regime subcase");
  const auto dx = derived_exponents(m);
  const double p = dx.p, q = dx.q, a = dx.a, b = dx.b;
  const double t2 = m.theta2, k2 = m.kappa2;
  const std::string name = to_string(subcase);
  GridCertificate empty;
  empty.check = "H >= c0 (" + name + ")";
  if (!(m.theta1 >= 1 - kTie && t2 < 1)) fail_search(name + ": needs theta1 >= 1 and theta2 < 1", empty);

  auto a_of = [&](double r, double beta) {
    double v = 0;
    if (m.a1 > 0 && same(m.p1, p)) v += m.a1;
    if (m.a2 > 0 && same(m.p2, p)) v += m.a2 * (r * beta + 1);
    if (m.a3 > 0 && same(m.p3, p)) v += m.a3 * (r * beta + 1) * gamma_ratio(m.alpha1, r * beta);
    return v;
  };
  auto b_of = [&](double r) {
    double v = 0;
    if (m.b1 > 0 && same(m.q1, q)) v += m.b1;
    if (m.b2 > 0 && same(m.q2, q)) v += m.b2 * (1 - r);
    if (m.b3 > 0 && same(m.q3, q)) v += m.b3 * (1 - r) * gamma_ratio(m.alpha2, -r);
    return v;
  };

  double r = 0, beta = 0, c0 = 0;
  const double s = q + 1 - t2;
  if (subcase == Subcase::iiia) {
    r = 0.5 * (1 - t2);
    beta = k2 > 0 ? 2 * k2 * (r + q) / (s * r) : 1.0;
    const double d1 = (1 - t2 - r) / s;
    const double c1 = std::pow(d1, -d1) * std::pow(1 - d1, d1 - 1) * std::pow(b_of(r), d1) * std::pow(m.eta2, 1 - d1);
    c0 = c1 / 3;
  } else {
    if (!(same(p, 0) && same(q, 0))) fail_search(name + ": needs p = q = 0", empty);
    const double lo = k2 / (1 - t2), hi = a > 0 ? b / a : kInf;
    if (!(lo < hi - kTie)) fail_search(name + ": empty interval for beta (" + fmt(lo) + ", " + fmt(hi) + ")", empty);
    beta = std::isfinite(hi) ? 0.5 * (lo + hi) : lo + 1;
    r = 0.5 * (1 - t2);
    for (int k = 0; k < 60 && !(b_of(r) > a_of(r, beta) * beta); ++k) r *= 0.5;
    if (!(b_of(r) > a_of(r, beta) * beta)) fail_search(name + ": no r with b(r) > a(r) beta", empty);
    const double e1 = 0.25 * (1 - a_of(r, beta) * beta / b_of(r));
    c0 = e1 * std::min(b_of(r), m.eta2);
  }
  const double ar = a_of(r, beta), br = b_of(r);

  auto margin = [&](double lx, double ly) {
    const double lur = r * ly - r * beta * lx;
    std::vector<LogTerm> t;
    auto add = [&](double coef, double rest) {
      if (coef != 0) t.push_back({coef > 0 ? 1.0 : -1.0, std::log(std::abs(coef)) + rest});
    };
    add(br, lur + q * ly);
    add(m.eta2, lur + (t2 - 1) * ly + k2 * lx);
    add(-ar * beta, lur + p * lx);
    add(-m.eta1 * beta, lur + (m.theta1 - 1) * lx + m.kappa1 * ly);
    add(-c0, 0.0);
    return log_terms_margin(t);
  };
  auto certify = [&](double log_eps, int n) {
    GridCertificate cert;
    cert.check = "H >= c0 (" + name + "), r = " + fmt(r) + ", beta = " + fmt(beta) + ", c0 = " + fmt(c0);
    cert.region = "0 < x, y < " + fmt(std::exp(log_eps)) + " (ln eps = " + fmt(log_eps) + ", down to e^-" +
                  fmt(opts.log_depth) + " eps)";
    cert.axis1 = "ln x";
    cert.axis2 = "ln y";
    cert.resolution = n;
    std::vector<double> axis;
    for (int i = 0; i < n; ++i) axis.push_back(log_eps - 1e-9 - opts.log_depth * (1.0 - static_cast<double>(i) / (n - 1)));
    return run_grid(cert, product(axis, axis), margin, opts);
  };

  GridCertificate best;
  for (double le : log_eps_ladder()) {
    GridCertificate cc = certify(le, 32);
    keep_best(best, cc);
    if (!cc.pass) continue;
    CertifiedConstants out;
    out.certificate = certify(le, opts.resolution);
    out.refined = certify(le, 2 * opts.resolution);
    keep_best(best, out.certificate);
    if (!out.pass()) continue;
    out.constants = {{"r", r}, {"beta", beta}, {"eps", std::exp(le)}, {"c0", c0}};
    return out;
  }
  fail_search(name + ": no eps certified H >= c0", best);
}

// ---------------------------------------------------------------- Young

double young_gap(double u, double v, double p) {
  if (!(p > 1) || u < 0 || v < 0) throw DomainError("young_gap needs p > 1 and u, v >= 0");
  const double q = p / (p - 1);
  const double rhs = std::pow(p, 1 / p) * std::pow(q, 1 / q) * std::pow(u, 1 / p) * std::pow(v, 1 / q);
  return u + v - rhs;
}

GridCertificate check_young(std::size_t samples, std::uint64_t seed) {
  GridCertificate cert;
  cert.check = "u + v >= p^(1/p) q^(1/q) u^(1/p) v^(1/q)";
  cert.region = "u, v log-uniform on [1e-6, 1e6] with u = 0 and equality draws, p in (1, 11)";
  cert.axis1 = "u";
  cert.axis2 = "v";
  cert.resolution = static_cast<int>(samples);
  cert.notes.push_back("non-strict inequality: margins carry a 1e-12 allowance so equality passes");
  RandomStream rs(seed, 0);
  cert.worst_margin = kInf;
  for (std::size_t i = 0; i < samples; ++i) {
    double u = std::exp(std::log(1e-6) + rs.uniform() * std::log(1e12));
    double v = std::exp(std::log(1e-6) + rs.uniform() * std::log(1e12));
    const double p = 1 + 10 * rs.uniform();
    if (i % 10 == 0) u = 0;
    if (i % 10 == 1) v = u * p / (p / (p - 1));  // equality when p u = q v
    const double gap = young_gap(u, v, p);
    const double mg = gap / (u + v + 1e-300) + 1e-12;
    ++cert.nodes;
    if (mg <= 0) ++cert.violations;
    if (mg < cert.worst_margin) {
      cert.worst_margin = mg;
      cert.worst_c1 = u;
      cert.worst_c2 = v;
    }
  }
  cert.pass = cert.nodes > 0 && cert.worst_margin > 0;
  return cert;
}

// ---------------------------------------------------------------- one-dimensional bump

bool BumpLemmaReport::pass() const {
  if (certificates.empty()) return false;
  return std::all_of(certificates.begin(), certificates.end(), [](const GridCertificate& c) { return c.pass; });
}

namespace {

// Offsets from the left end: log-spaced toward it, linear elsewhere.
std::vector<double> bump_offsets(double width, int n) {
  std::vector<double> out;
  const int nl = n / 2;
  for (double v : grid_nodes(1e-3 * width, 0.5 * width, nl, Spacing::log)) out.push_back(v);
  for (int i = 1; i <= n - nl; ++i) out.push_back(width * (0.5 + 0.5 * i / (n - nl + 1.0)));
  return out;
}

struct BumpSample {
  double x, lambda, r1, r2, jump;
};

std::vector<BumpSample> sample_bump(double lambda1, const std::vector<double>& xs, const std::vector<double>& lambdas,
                                    double alpha, const CriteriaOptions& opts) {
  const StableMeasure m = make_stable_measure(alpha);
  std::vector<BumpSample> out(xs.size() * lambdas.size());
  parallel_for(out.size(), opts.workers, [&](std::size_t k) {
    const double lam = lambdas[k / xs.size()];
    const double x = xs[k % xs.size()];
    const auto h = make_bump_profile({1, 3, lam, lambda1});
    BumpSample s{x, lam, 0, 0, 0};
    h->relative_derivatives(x, s.r1, s.r2);
    s.jump = relative_jump_integral(*h, x, m, opts.quad) / m.c_alpha;
    out[k] = s;
  });
  return out;
}

GridCertificate grade(GridCertificate cert, const std::vector<BumpSample>& samples,
                      const std::function<double(const BumpSample&)>& margin, bool keep) {
  cert.nodes = samples.size();
  cert.worst_margin = kInf;
  cert.axis1 = "x";
  cert.axis2 = "lambda";
  for (const auto& s : samples) {
    double mg = margin(s);
    if (std::isnan(mg)) mg = -kInf;
    if (mg <= 0) ++cert.violations;
    if (mg < cert.worst_margin) {
      cert.worst_margin = mg;
      cert.worst_c1 = s.x;
      cert.worst_c2 = s.lambda;
    }
    if (keep) cert.dump.push_back({s.x, s.lambda, mg});
  }
  cert.pass = cert.nodes > 0 && cert.worst_margin > 0;
  return cert;
}

std::vector<double> lambda_nodes(double lo, double hi) { return grid_nodes(lo, hi, 9, Spacing::log); }

}  // namespace

BumpLemmaReport check_bump_lemma(double alpha, const CriteriaOptions& opts) {
  if (!(alpha > 1 && alpha < 2)) throw DomainError("bump lemma needs alpha in (1,2)");
  BumpLemmaReport rep;
  const int n = opts.resolution;

  // Derivative bound, for a spread of both weights.
  {
    GridCertificate cert;
    cert.check = "h' <= lambda h (x - 1)^-2";
    cert.region = "x in (1,3), lambda and lambda1 in {0.1, 1, 10, 100}";
    cert.resolution = n;
    std::vector<BumpSample> rows;
    const auto xs = bump_offsets(2.0, n);
    for (double lam : {0.1, 1.0, 10.0, 100.0}) {
      for (double lam1 : {0.1, 1.0, 10.0, 100.0}) {
        const auto h = make_bump_profile({1, 3, lam, lam1});
        for (double off : xs) {
          BumpSample s{1 + off, lam, 0, 0, lam1};
          h->relative_derivatives(s.x, s.r1, s.r2);
          rows.push_back(s);
        }
      }
    }
    rep.certificates.push_back(grade(cert, rows, [](const BumpSample& s) {
      const double bound = s.lambda / ((s.x - 1) * (s.x - 1));
      return normalized_margin(bound - s.r1, std::abs(bound) + std::abs(s.r1));
    }, opts.keep_nodes));
  }

  // Interior inequalities on (1,2). A weak right barrier keeps the maximum beyond 2.5.
  const double lambda1 = 1.0 / 73;
  const double c0 = std::exp(-2.0) * std::pow(2.0, -8) / (2 - alpha) * std::pow(73.0, alpha - 2);
  const auto inner = bump_offsets(1.0, n);
  std::vector<double> xs_inner;
  for (double off : inner) xs_inner.push_back(1 + off);
  double lambda0 = 0;
  GridCertificate second, jump;
  for (double l0 : {10.0, 100.0, 1000.0}) {
    const auto samples = sample_bump(lambda1, xs_inner, lambda_nodes(l0, 100 * l0), alpha, opts);
    GridCertificate c2;
    c2.check = "h''/h >= lambda^2 c0 (x-1)^-4";
    c2.region = "x in (1,2), lambda in [" + fmt(l0) + ", " + fmt(100 * l0) + "], lambda1 = 1/73";
    c2.resolution = n;
    c2 = grade(c2, samples, [&](const BumpSample& s) {
      const double rhs = s.lambda * s.lambda * c0 * std::pow(s.x - 1, -4);
      return normalized_margin(s.r2 - rhs, std::abs(s.r2) + rhs);
    }, opts.keep_nodes);
    GridCertificate cj;
    cj.check = "h^-1 int K h z^{-1-alpha} dz >= lambda^alpha c0 (x-1)^{-2-alpha}";
    cj.region = c2.region;
    cj.resolution = n;
    cj = grade(cj, samples, [&](const BumpSample& s) {
      const double rhs = std::pow(s.lambda, alpha) * c0 * std::pow(s.x - 1, -2 - alpha);
      return normalized_margin(s.jump - rhs, std::abs(s.jump) + rhs);
    }, opts.keep_nodes);
    second = c2;
    jump = cj;
    if (c2.pass && cj.pass) {
      lambda0 = l0;
      break;
    }
  }
  rep.certificates.push_back(second);
  rep.certificates.push_back(jump);

  // Whole-interval inequalities with lambda1 = 1 and a subtracted constant.
  std::vector<double> xs_full;
  for (double off : bump_offsets(2.0, n)) xs_full.push_back(1 + off);
  const auto all = sample_bump(1.0, xs_full, lambda_nodes(10, 1e5), alpha, opts);
  GridCertificate best2, bestj;
  double t0 = 0, t1 = 0, tl = 0;
  bool found = false;
  for (double l0 : {10.0, 100.0, 1000.0}) {
    std::vector<BumpSample> sub;
    for (const auto& s : all)
      if (s.lambda >= l0 * (1 - 1e-12) && s.lambda <= 100 * l0 * (1 + 1e-12)) sub.push_back(s);
    for (int k = 2; k <= 20 && !found; ++k) {
      const double ct0 = std::pow(2.0, -k);
      for (int j = 0; j <= 8 && !found; ++j) {
        const double ct1 = std::pow(10.0, j);
        GridCertificate c2;
        c2.check = "h''/h >= lambda^2 c0' [(x-1)^-4 - c1']";
        c2.region = "x in (1,3), lambda in [" + fmt(l0) + ", " + fmt(100 * l0) + "], lambda1 = 1";
        c2.resolution = n;
        c2 = grade(c2, sub, [&](const BumpSample& s) {
          const double rhs = s.lambda * s.lambda * ct0 * (std::pow(s.x - 1, -4) - ct1);
          return normalized_margin(s.r2 - rhs, std::abs(s.r2) + std::abs(rhs));
        }, opts.keep_nodes);
        GridCertificate cj;
        cj.check = "h^-1 int K h z^{-1-alpha} dz >= lambda^alpha c0' [(x-1)^{-2-alpha} - c1']";
        cj.region = c2.region;
        cj.resolution = n;
        cj = grade(cj, sub, [&](const BumpSample& s) {
          const double rhs = std::pow(s.lambda, alpha) * ct0 * (std::pow(s.x - 1, -2 - alpha) - ct1);
          return normalized_margin(s.jump - rhs, std::abs(s.jump) + std::abs(rhs));
        }, opts.keep_nodes);
        if (best2.nodes == 0 || std::min(c2.worst_margin, cj.worst_margin) > std::min(best2.worst_margin, bestj.worst_margin)) {
          best2 = c2;
          bestj = cj;
        }
        if (c2.pass && cj.pass) {
          found = true;
          best2 = c2;
          bestj = cj;
          t0 = ct0;
          t1 = ct1;
          tl = l0;
        }
      }
    }
    if (found) break;
  }
  rep.certificates.push_back(best2);
  rep.certificates.push_back(bestj);
  rep.constants = {{"alpha", alpha},    {"lambda1", lambda1}, {"c0", c0},         {"lambda0", lambda0},
                   {"lambda0_full", tl}, {"c0_full", t0},      {"c1_full", t1}};
  return rep;
}

// ---------------------------------------------------------------- exp_ratio bounds

GridCertificate check_exp_ratio_bounds(std::size_t draws, std::uint64_t seed, const CriteriaOptions& opts) {
  GridCertificate cert;
  cert.check = "exp_ratio second partials and jump integrals dominate their lower bounds";
  cert.region = "x, y log-uniform on [0.05, 5], lambda in [0.2, 5], r in [0.05, 0.95], beta in [0.1, 3], "
                "alpha1, alpha2 in [1.1, 1.9]";
  cert.resolution = static_cast<int>(draws);
  struct Draw {
    double x, y, alpha1, alpha2;
    ExpRatioShape s;
  };
  std::vector<Draw> ds;
  RandomStream rs(seed, 1);
  auto lu = [&](double lo, double hi) { return std::exp(std::log(lo) + rs.uniform() * std::log(hi / lo)); };
  for (std::size_t i = 0; i < draws; ++i) {
    Draw d;
    d.x = lu(0.05, 5);
    d.y = lu(0.05, 5);
    d.s.lambda = lu(0.2, 5);
    d.s.r = 0.05 + 0.9 * rs.uniform();
    d.s.beta = lu(0.1, 3);
    d.alpha1 = 1.1 + 0.8 * rs.uniform();
    d.alpha2 = 1.1 + 0.8 * rs.uniform();
    ds.push_back(d);
  }
  std::vector<double> worst(draws);
  parallel_for(draws, opts.workers, [&](std::size_t i) {
    const Draw& d = ds[i];
    const StableMeasure m1 = make_stable_measure(d.alpha1), m2 = make_stable_measure(d.alpha2);
    const auto g = make_exp_ratio(d.s);
    const Jet j = g->jet(d.x, d.y);
    const ExpRatioBounds b = exp_ratio_bounds(d.s, d.x, d.y, m1, m2);
    const double jx = jump_integral(*g, d.x, d.y, Axis::first, m1, opts.quad);
    const double jy = jump_integral(*g, d.x, d.y, Axis::second, m2, opts.quad);
    auto mg = [](double v, double lb) { return normalized_margin(v - lb, std::abs(v) + std::abs(lb)); };
    worst[i] = std::min({mg(j.dxx, b.dxx), mg(j.dyy, b.dyy), mg(jx, b.jump_x), mg(jy, b.jump_y)});
  });
  cert.nodes = draws;
  cert.worst_margin = kInf;
  for (std::size_t i = 0; i < draws; ++i) {
    const double w = std::isnan(worst[i]) ? -kInf : worst[i];
    if (w <= 0) ++cert.violations;
    if (w < cert.worst_margin) {
      cert.worst_margin = w;
      cert.worst_c1 = ds[i].x;
      cert.worst_c2 = ds[i].y;
    }
    if (opts.keep_nodes) cert.dump.push_back({ds[i].x, ds[i].y, w});
  }
  cert.pass = draws > 0 && cert.worst_margin > 0;
  return cert;
}

// ---------------------------------------------------------------- irreducibility bump

CertifiedConstants check_prop24_bump(const ModelParams& params, const BumpTarget& t, const CriteriaOptions& opts) {
  if (!(0 < t.y3 && t.y3 < t.y1 && t.y1 < t.y2 && 0 < t.x1 && t.x1 < t.x2)) {
    throw PreconditionError("target needs 0 < x1 < x2 and 0 < y3 < y1 < y2");
  }
  const bool inside = t.x0 >= t.x1 && t.x0 <= t.x2 && t.y0 >= t.y1 && t.y0 <= t.y2;
  if (inside) throw PreconditionError("start point lies inside the target rectangle");
  if (!(t.x0 > t.x1 && t.x0 < t.x2 && t.y0 > t.y3 && t.y0 < t.y1)) {
    throw PreconditionError("start point must satisfy x1 < x0 < x2 and y3 < y0 < y1");
  }

  auto region = [&](int n) -> Axes {
    return {grid_nodes(t.x1, t.x2, n, Spacing::both_ends), grid_nodes(t.y3, t.y1, n, Spacing::both_ends)};
  };
  auto build = [&](double lam, double lam_y, double lam1_y) {
    return make_bump_product({t.x1, t.x2, lam, 1.0}, {t.y3, t.y2, lam_y, lam1_y});
  };
  const std::string region_text =
      "(" + fmt(t.x1) + "," + fmt(t.x2) + ") x (" + fmt(t.y3) + "," + fmt(t.y1) + ")";

  const Axes coarse = region(16);
  GridCertificate best;
  best.check = "Lg >= d g for the bump product";
  best.region = region_text;
  best.resolution = 16;
  best.nodes = 16 * 16;
  for (double lam : {10.0, 100.0, 1000.0}) {
    for (double mult : {1.0, 10.0, 100.0}) {
      for (double lam1_y : {1.0 / 73, 0.1, 0.5}) {
        const auto g = build(lam, lam * mult, lam1_y);
        if (!(min_total(product_terms(params, *g, coarse, opts)) > 0)) continue;
        CertifiedConstants out;
        double d = 0;
        if (!certify_ratio_floor(params, *g, region, region_text, opts, out, d)) continue;
        // Structural conditions: positive at the start, bounded by 1, zero on the envelope.
        bool structural = std::isfinite(g->log_value(t.x0, t.y0));
        for (double v : grid_nodes(t.y3, t.y2, 11, Spacing::linear)) {
          structural = structural && g->log_value(t.x1, v) == -kInf && g->log_value(t.x2, v) == -kInf &&
                       g->log_value(t.x2 + 1, v) == -kInf;
        }
        for (double u : grid_nodes(t.x1, t.x2, 11, Spacing::linear)) {
          structural = structural && g->log_value(u, t.y3) == -kInf && g->log_value(u, t.y2) == -kInf &&
                       g->log_value(u, t.y2 + 1) == -kInf;
        }
        for (double x : coarse.first)
          for (double y : coarse.second) structural = structural && g->log_value(x, y) <= 0;
        out.certificate.notes.push_back(structural ? "positive at start, bounded by 1, zero on the envelope"
                                                   : "structural conditions failed");
        if (!structural) out.certificate.pass = false;
        keep_best(best, out.certificate);
        if (!out.pass()) continue;
        out.constants = {{"lambda", lam}, {"lambda_y", lam * mult}, {"lambda1", 1.0}, {"lambda1_y", lam1_y}, {"d", d}};
        return out;
      }
    }
  }
  fail_search("no bump weights certified Lg >= d g", best);
}

// ---------------------------------------------------------------- survival criterion

GridCertificate check_prop25_conditions(const ModelParams& params, const PowerRatioShape& shape, double u_star,
                                        double eps0, const CriteriaOptions& opts) {
  if (!(u_star > 0 && eps0 > 0)) throw ConfigError("prop25 check needs u* > 0 and eps0 > 0");
  const auto g = make_power_ratio(shape);
  const double beta = shape.beta;
  GridCertificate cert;
  cert.check = "Lg <= 0, g = " + g->describe();
  cert.region = "0 < x, y <= " + fmt(eps0) + ", y x^-beta > " + fmt(u_star) + " (x down to e^-" +
                fmt(std::min(opts.log_depth, 23.0)) + " eps)";
  cert.axis1 = "ln x";
  cert.axis2 = "ln u";
  cert.resolution = opts.resolution;
  // The u = u* edge is excluded; nodes start just above it.
  const Points pts = ratio_region(std::log(eps0), std::log(u_star) + 1e-9, beta, opts.resolution,
                                  std::min(opts.log_depth, 23.0));
  cert = run_grid(cert, pts, [&](double lx, double lu) {
    const double x = std::exp(lx), y = std::exp(lu + beta * lx);
    const GeneratorTerms t = apply_generator_relative(params, *g, x, y, opts.quad);
    return normalized_margin(-t.total, t.magnitude());
  }, opts);

  // Positivity of g and finiteness of Lg on a compact box.
  bool box_ok = true;
  for (double x : grid_nodes(0.1, 10, 21, Spacing::log)) {
    for (double y : grid_nodes(0.1, 10, 21, Spacing::log)) {
      const Jet j = g->jet(x, y);
      const GeneratorTerms t = apply_generator(params, *g, x, y, opts.quad);
      box_ok = box_ok && j.value > 0 && std::isfinite(j.value) && std::isfinite(t.total);
    }
  }
  cert.notes.push_back(box_ok ? "g > 0 and Lg finite on [0.1,10]^2" : "g or Lg degenerate on [0.1,10]^2");
  if (!box_ok) cert.pass = false;
  if (!cert.pass) fail_search("Lg <= 0 does not hold on the ratio region", cert);
  return cert;
}

}  // namespace lvlab
