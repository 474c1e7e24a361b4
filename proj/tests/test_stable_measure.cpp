#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "lvlab/errors.hpp"
#include "lvlab/quadrature.hpp"
#include "lvlab/stable_measure.hpp"

using namespace lvlab;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
const double kPi = 3.14159265358979323846;

struct BinomialCase {
  double alpha;
  double beta;
  BinomialKind kind;
  double expected;  // 60-digit mpmath quadrature of the integrand, frozen
};

const BinomialCase kCases[] = {
    {1.5, 0.5, BinomialKind::neg_power_linear, 0.95492965855137201},
    {1.5, 1.0, BinomialKind::neg_power_linear, 1.5},
    {1.5, 2.0, BinomialKind::neg_power_linear, 2.25},
    {1.7, 0.3, BinomialKind::neg_power_linear, 0.62540111797201611},
    {1.2, 0.1, BinomialKind::neg_power_linear, 0.41097659601123832},
    {1.5, 0.25, BinomialKind::neg_power_linear, 0.57206982262635989},
    {1.5, 0.5, BinomialKind::neg_power_compensated, 0.63661977236758134},
    {1.5, 1.0, BinomialKind::neg_power_compensated, 1.5},
    {1.5, 2.0, BinomialKind::neg_power_compensated, 3.75},
    {1.7, 0.3, BinomialKind::neg_power_compensated, 0.36788301057177417},
    {1.2, 0.1, BinomialKind::neg_power_compensated, 0.10274414900279528},
    {1.5, 0.25, BinomialKind::neg_power_compensated, 0.28603491131317995},
    {1.7, 0.3, BinomialKind::pos_power_linear, 0.95913227383757491},
    {1.2, 0.1, BinomialKind::pos_power_linear, 1.1635165940039428},
    {1.5, 0.25, BinomialKind::pos_power_linear, 1.2519402625111098},
    {1.5, 0.5, BinomialKind::pos_power_compensated, -0.31830988618379067},
    {1.7, 0.3, BinomialKind::pos_power_compensated, -0.22567818207942938},
    {1.2, 0.1, BinomialKind::pos_power_compensated, -0.096959716167048675},
    {1.5, 0.25, BinomialKind::pos_power_compensated, -0.2086567104185183},
};
}  // namespace

TEST_CASE("normalization constant") {
  // Gamma(3/2) Gamma(1/2) = pi/2, so c = 0.75 / (pi/2).
  CHECK(stable_normalization(1.5) == doctest::Approx(1.5 / kPi).epsilon(1e-15));
  CHECK(stable_normalization(1.7) == doctest::Approx(0.43778078258041132).epsilon(1e-14));
  CHECK_THROWS_AS(make_stable_measure(2.0), DomainError);
  CHECK_THROWS_AS(make_stable_measure(1.0), DomainError);
}

TEST_CASE("tail mass and truncated moments") {
  auto m = make_stable_measure(1.5);
  CHECK(tail_mass(m, 1.0) == doctest::Approx(1 / kPi).epsilon(1e-14));
  CHECK(tail_mass(m, 4.0) == doctest::Approx(1 / kPi / 8).epsilon(1e-14));
  CHECK(tail_mass(m, kInf) == 0);
  CHECK_THROWS_AS(tail_mass(m, 0.0), DomainError);
  CHECK_THROWS_AS(tail_mass(m, -1.0), DomainError);

  CHECK(truncated_moment(m, 2, 0, 1) == doctest::Approx(3 / kPi).epsilon(1e-14));
  CHECK(truncated_moment(m, 1, 1, kInf) == doctest::Approx(3 / kPi).epsilon(1e-14));
  // c [z^{0.5}/0.5] from 1 to 4 = 2c
  CHECK(truncated_moment(m, 2, 1, 4) == doctest::Approx(3 / kPi).epsilon(1e-14));
  CHECK_THROWS_AS(truncated_moment(m, 1, 0, 1), NonIntegrable);
  CHECK_THROWS_AS(truncated_moment(m, 2, 1, kInf), NonIntegrable);
  CHECK_THROWS_AS(truncated_moment(m, 3, 1, 2), DomainError);
}

TEST_CASE("tail mass is decreasing and scales like delta^-alpha") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 100);
  for (double a : {1.1, 1.5, 1.9}) {
    auto m = make_stable_measure(a);
    for (int i = 0; i < 200; ++i) {
      double d = u(rng), s = 1 + u(rng) / 10;
      CHECK(tail_mass(m, s * d) < tail_mass(m, d));
      CHECK(tail_mass(m, s * d) == doctest::Approx(tail_mass(m, d) * std::pow(s, -a)).epsilon(1e-12));
    }
  }
}

TEST_CASE("binomial closed forms match frozen high-precision quadrature") {
  for (const auto& c : kCases) {
    auto m = make_stable_measure(c.alpha);
    INFO(to_string(c.kind), " alpha=", c.alpha, " beta=", c.beta);
    CHECK(binomial_power_integral(m, c.kind, c.beta) == doctest::Approx(c.expected).epsilon(1e-12));
  }
}

TEST_CASE("binomial closed forms agree with adaptive quadrature") {
  QuadratureConfig cfg;
  for (const auto& c : kCases) {
    auto m = make_stable_measure(c.alpha);
    INFO(to_string(c.kind), " alpha=", c.alpha, " beta=", c.beta);
    const double q = binomial_power_integral_quadrature(m, c.kind, c.beta, cfg);
    CHECK(std::abs(q - c.expected) <= 1e-8 * std::max(1.0, std::abs(c.expected)));
  }
}

TEST_CASE("binomial admissibility") {
  auto m = make_stable_measure(1.5);
  CHECK_THROWS_AS(binomial_power_integral(m, BinomialKind::pos_power_linear, 0.5), DomainError);
  CHECK_THROWS_AS(binomial_power_integral(m, BinomialKind::pos_power_compensated, 1.0), DomainError);
  CHECK_THROWS_AS(binomial_power_integral(m, BinomialKind::neg_power_linear, 0.0), DomainError);
  CHECK_NOTHROW(binomial_power_integral(m, BinomialKind::pos_power_linear, 0.49));
  CHECK(binomial_kind_from_string("pos_power_compensated") == BinomialKind::pos_power_compensated);
  CHECK_THROWS_AS(binomial_kind_from_string("nope"), ConfigError);
}

TEST_CASE("jump sampler follows the normalized tail") {
  auto m = make_stable_measure(1.5);
  CHECK(sample_jump(m, 2.0, 1.0) == doctest::Approx(2.0));
  CHECK(sample_jump(m, 1.0, 0.125) == doctest::Approx(4.0).epsilon(1e-14));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  const int n = 200000;
  int above = 0;
  for (int i = 0; i < n; ++i) {
    double z = sample_jump(m, 0.5, 1 - u(rng));
    CHECK_FALSE(z < 0.5);
    if (z > 1.0) ++above;
  }
  // P(Z > 2 delta) = 2^-alpha
  const double p = std::pow(2.0, -1.5);
  const double se = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(above / double(n) - p) < 5 * se);
}
