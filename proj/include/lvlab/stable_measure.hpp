#pragma once

#include <string>

namespace lvlab {

struct QuadratureConfig;

// mu(dz) = c_alpha z^{-1-alpha} dz on (0, inf), alpha in (1,2).
struct StableMeasure {
  double alpha = 1.5;
  double c_alpha = 0;
};

StableMeasure make_stable_measure(double alpha);
double stable_normalization(double alpha);

// mu((delta, inf))
double tail_mass(const StableMeasure& m, double delta);

// integral of z^k mu(dz) over (lo, hi); hi may be +inf. k in {1, 2}.
double truncated_moment(const StableMeasure& m, int k, double lo, double hi);

// Closed-form values of the four integrals of (1+z)^{+-beta} against mu.
enum class BinomialKind {
  neg_power_linear,       // [1 - (1+z)^-b] z
  neg_power_compensated,  // (1+z)^-b - 1 + b z
  pos_power_linear,       // [(1+z)^b - 1] z,     0 < b < alpha-1
  pos_power_compensated,  // (1+z)^b - 1 - b z,   0 < b < 1
};

std::string to_string(BinomialKind k);
BinomialKind binomial_kind_from_string(const std::string& s);
bool binomial_beta_admissible(BinomialKind k, double alpha, double beta);

double binomial_power_integral(const StableMeasure& m, BinomialKind kind, double beta);
// Same integral by adaptive quadrature of the integrand itself.
double binomial_power_integral_quadrature(const StableMeasure& m, BinomialKind kind, double beta,
                                          const QuadratureConfig& cfg);

// Inverse-CDF draw from the normalized tail on (delta, inf); u in (0,1].
double sample_jump(const StableMeasure& m, double delta, double u);

}  // namespace lvlab
