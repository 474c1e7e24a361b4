#include "lvlab/stable_measure.hpp"

#include <cmath>
#include <limits>

#include "lvlab/errors.hpp"
#include "lvlab/quadrature.hpp"

namespace lvlab {

namespace {

constexpr double kPoleGuard = 1e-6;

}  // namespace

double stable_normalization(double alpha) {
  if (!(alpha > 1 && alpha < 2)) throw DomainError("stable index must lie in (1,2)");
  return alpha * (alpha - 1) / (std::tgamma(alpha) * std::tgamma(2 - alpha));
}

StableMeasure make_stable_measure(double alpha) { return {alpha, stable_normalization(alpha)}; }

double tail_mass(const StableMeasure& m, double delta) {
  if (!(delta > 0)) throw DomainError("tail_mass needs delta > 0");
  if (std::isinf(delta)) return 0.0;
  return m.c_alpha * std::pow(delta, -m.alpha) / m.alpha;
}

double truncated_moment(const StableMeasure& m, int k, double lo, double hi) {
  if (k != 1 && k != 2) throw DomainError("truncated_moment supports k = 1 or 2");
  if (!(lo >= 0) || !(hi > lo)) throw DomainError("truncated_moment needs 0 <= lo < hi");
  const double e = k - m.alpha;  // k=1: negative, k=2: positive
  if (k == 1 && lo == 0) throw NonIntegrable("first moment diverges at 0");
  if (k == 2 && std::isinf(hi)) throw NonIntegrable("second moment diverges at infinity");
  auto prim = [&](double z) { return std::isinf(z) ? 0.0 : std::pow(z, e) / e; };
  return m.c_alpha * (prim(hi) - prim(lo));
}

std::string to_string(BinomialKind k) {
  switch (k) {
    case BinomialKind::neg_power_linear: return "neg_power_linear";
    case BinomialKind::neg_power_compensated: return "neg_power_compensated";
    case BinomialKind::pos_power_linear: return "pos_power_linear";
    case BinomialKind::pos_power_compensated: return "pos_power_compensated";
  }
  return "?";
}

BinomialKind binomial_kind_from_string(const std::string& s) {
  for (auto k : {BinomialKind::neg_power_linear, BinomialKind::neg_power_compensated,
                 BinomialKind::pos_power_linear, BinomialKind::pos_power_compensated}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown integral kind '" + s + "'");
}

bool binomial_beta_admissible(BinomialKind k, double alpha, double beta) {
  if (!(beta > 0) || !std::isfinite(beta)) return false;
  switch (k) {
    case BinomialKind::neg_power_linear:
    case BinomialKind::neg_power_compensated:
      return true;
    case BinomialKind::pos_power_linear:
      return beta < alpha - 1 - kPoleGuard;
    case BinomialKind::pos_power_compensated:
      return beta < 1 - kPoleGuard;
  }
  return false;
}

double binomial_power_integral(const StableMeasure& m, BinomialKind kind, double beta) {
  const double a = m.alpha;
  if (!binomial_beta_admissible(kind, a, beta)) {
    throw DomainError("beta = " + std::to_string(beta) + " outside the admissible range of " +
                      to_string(kind));
  }
  const double ga = std::tgamma(a);
  switch (kind) {
    case BinomialKind::neg_power_linear:
      return a * beta * std::tgamma(a + beta - 1) / (ga * std::tgamma(beta + 1));
    case BinomialKind::neg_power_compensated:
      return beta * (beta + 1) * std::tgamma(a + beta) / (ga * std::tgamma(beta + 2));
    case BinomialKind::pos_power_linear:
      return a * beta * std::tgamma(a - beta - 1) / (ga * std::tgamma(1 - beta));
    case BinomialKind::pos_power_compensated:
      return -beta * (1 - beta) * std::tgamma(a - beta) / (ga * std::tgamma(2 - beta));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double binomial_power_integral_quadrature(const StableMeasure& m, BinomialKind kind, double beta,
                                          const QuadratureConfig& cfg) {
  if (!binomial_beta_admissible(kind, m.alpha, beta)) {
    throw DomainError("beta outside the admissible range of " + to_string(kind));
  }
  // Each integrand is the jump remainder at 0 of a one-variable function h with h'(0) = 0
  // (linear kinds) or of (1+w)^{+-beta} (compensated kinds).
  const double b = beta;
  JumpIntegrand f;
  switch (kind) {
    case BinomialKind::neg_power_linear:
      f.remainder = [b](double z) { return z - z * std::pow(1 + z, -b); };
      f.second_derivative_at_shift = [b](double w) {
        return 2 * b * std::pow(1 + w, -b - 1) - b * (b + 1) * w * std::pow(1 + w, -b - 2);
      };
      break;
    case BinomialKind::neg_power_compensated:
      f.remainder = [b](double z) { return std::pow(1 + z, -b) - 1 + b * z; };
      f.second_derivative_at_shift = [b](double w) { return b * (b + 1) * std::pow(1 + w, -b - 2); };
      break;
    case BinomialKind::pos_power_linear:
      f.remainder = [b](double z) { return z * std::pow(1 + z, b) - z; };
      f.second_derivative_at_shift = [b](double w) {
        return 2 * b * std::pow(1 + w, b - 1) + b * (b - 1) * w * std::pow(1 + w, b - 2);
      };
      break;
    case BinomialKind::pos_power_compensated:
      f.remainder = [b](double z) { return std::pow(1 + z, b) - 1 - b * z; };
      f.second_derivative_at_shift = [b](double w) { return b * (b - 1) * std::pow(1 + w, b - 2); };
      break;
  }
  if (kind == BinomialKind::pos_power_linear) f.tail_growth = 1 + b;
  return integrate_against_stable(m, f, cfg);
}

double sample_jump(const StableMeasure& m, double delta, double u) {
  return delta * std::pow(u, -1.0 / m.alpha);
}

}  // namespace lvlab
