#include <doctest.h>

#include <cmath>
#include <random>

#include "lvlab/errors.hpp"
#include "lvlab/generator.hpp"
#include "lvlab/model.hpp"
#include "lvlab/test_functions.hpp"

using namespace lvlab;

namespace {
const double kPi = 3.14159265358979323846;

ModelParams full_params() {
  ModelParams m;
  m.a1 = 0.7;
  m.p1 = 0.5;
  m.a2 = 1.1;
  m.p2 = 0.3;
  m.a3 = 0.9;
  m.p3 = 0.2;
  m.b1 = 0.4;
  m.q1 = 1;
  m.b2 = 0.6;
  m.q2 = 0;
  m.b3 = 1.3;
  m.q3 = 0.8;
  m.alpha1 = 1.5;
  m.alpha2 = 1.7;
  m.eta1 = 1.2;
  m.theta1 = 1.5;
  m.kappa1 = 0.5;
  m.eta2 = 0.8;
  m.theta2 = 0.5;
  m.kappa2 = 1;
  return m;
}

double sum_fixed_order(const GeneratorTerms& t) {
  double s = t.drift_x;
  s += t.diff_x;
  s += t.jump_x;
  s += t.drift_y;
  s += t.diff_y;
  s += t.jump_y;
  s += t.interaction_x;
  s += t.interaction_y;
  return s;
}
}  // namespace

TEST_CASE("jump remainders") {
  auto lin = make_polynomial(0, 1, 0, 0, 0);
  auto sq = make_polynomial(0, 0, 0, 1, 0);
  for (double z : {0.0, 0.1, 3.0, 100.0}) {
    CHECK(std::abs(k1(*lin, 1.3, 0.4, z)) < 1e-14 * (1 + z));
    CHECK(k1(*sq, 1.3, 0.4, z) == doctest::Approx(z * z));
    CHECK(k2(*sq, 1.3, 0.4, z) == 0);
  }
  auto g = make_power_ratio(PowerRatioShape{2, 0.25, 0.5});
  CHECK(k1(*g, 1, 1, 1) == doctest::Approx(std::sqrt(2.0) - 1 - 0.5).epsilon(1e-14));
  CHECK(k1(*g, 1, 1, 1) == doctest::Approx(-0.085786).epsilon(1e-5));
}

TEST_CASE("jump integral examples") {
  QuadratureConfig cfg;
  auto m = make_stable_measure(1.5);
  auto c = make_polynomial(3, 0, 0, 0, 0);
  CHECK(jump_integral(*c, 1, 1, Axis::first, m, cfg) == 0);
  auto g = make_power_ratio(PowerRatioShape{2, 0.25, 0.5});
  CHECK(std::abs(jump_integral(*g, 1, 1, Axis::first, m, cfg) + 1 / kPi) < 1e-8);
  auto sq = make_polynomial(0, 0, 0, 1, 0);
  CHECK_THROWS_AS(jump_integral(*sq, 1, 1, Axis::first, m, cfg), NonConvergent);
}

TEST_CASE("closed forms and quadrature agree for power_ratio on a grid") {
  QuadratureConfig cfg;
  for (double a : {1.5, 1.8}) {
    auto m1 = make_stable_measure(a);
    auto m2 = make_stable_measure(3.0 - a);
    for (auto shape : {PowerRatioShape{2, 0.25, 0.5}, PowerRatioShape{1, 0.3, 0.2}}) {
      auto g = make_power_ratio(shape);
      for (int i = 0; i < 5; ++i) {
        for (int k = 0; k < 5; ++k) {
          const double x = 0.1 + 1.9 * i / 4, y = 0.1 + 1.9 * k / 4;
          auto c = g->closed_jump_integrals(x, y, m1, m2);
          REQUIRE(c.has_value());
          const double q1 = jump_integral(*g, x, y, Axis::first, m1, cfg);
          const double q2 = jump_integral(*g, x, y, Axis::second, m2, cfg);
          INFO("x=", x, " y=", y, " alpha=", a);
          CHECK(std::abs(q1 - c->first) < 1e-8 * (1 + std::abs(c->first)));
          CHECK(std::abs(q2 - c->second) < 1e-8 * (1 + std::abs(c->second)));
        }
      }
    }
  }
}

TEST_CASE("log_sum first-axis integral equals S^-alpha") {
  // int (w - ln(1+w)) mu(dw) = 1, so int K^1 g mu(dz) = (x + y^beta)^-alpha for g = -ln(x + y^beta).
  QuadratureConfig cfg;
  for (double a : {1.3, 1.5, 1.9}) {
    auto m = make_stable_measure(a);
    auto g = make_log_sum(2, 0.5);
    CHECK_FALSE(g->closed_jump_integrals(1, 1, m, m).has_value());
    for (double x : {0.05, 0.5, 3.0}) {
      for (double y : {0.1, 2.0}) {
        const double s = x + std::sqrt(y);
        const double q = jump_integral(*g, x, y, Axis::first, m, cfg);
        CHECK(q == doctest::Approx(std::pow(s, -a)).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("generator examples") {
  QuadratureConfig cfg;
  auto c = make_polynomial(2, 0, 0, 0, 0);
  auto t = apply_generator(full_params(), *c, 0.7, 1.3, cfg);
  CHECK(t.total == 0);
  CHECK(t.magnitude() == 0);

  ModelParams m;
  m.a1 = 1;
  m.p1 = 0;
  m.a2 = m.a3 = 0;
  m.eta1 = 1;
  m.theta1 = 2;
  m.kappa1 = 1;
  validate(m, Validation::relaxed);
  auto lin = make_polynomial(0, 1, 0, 0, 0);
  for (double x : {0.3, 1.0, 2.5}) {
    for (double y : {0.2, 1.7}) {
      auto r = apply_generator(m, *lin, x, y, cfg);
      CHECK(r.total == doctest::Approx(-x - x * x * y).epsilon(1e-14));
    }
  }
}

TEST_CASE("power_ratio generator matches a term-by-term closed-form assembly") {
  // g = x^{bd} y^{-d} + y^rho with (beta, delta, rho) = (2, 0.25, 0.5)
  QuadratureConfig cfg;
  auto p = full_params();
  const double x = 0.5, y = 0.25, bd = 0.5, d = 0.25, r = 0.5;
  const double ga1 = std::tgamma(p.alpha1), ga2 = std::tgamma(p.alpha2);
  const double gx = std::pow(x, bd) * std::pow(y, -d);
  const double gxx_dx = bd * gx / x;
  const double g_dxx = bd * (bd - 1) * gx / (x * x);
  const double g_dy = -d * gx / y + r * std::pow(y, r - 1);
  const double g_dyy = d * (d + 1) * gx / (y * y) + r * (r - 1) * std::pow(y, r - 2);
  // Jump integrals of x^s and y^{-d}, y^r against the stable measures.
  const double jx = -bd * (1 - bd) * std::tgamma(p.alpha1 - bd) / (ga1 * std::tgamma(2 - bd)) *
                    gx * std::pow(x, -p.alpha1);
  const double jy_neg = d * (d + 1) * std::tgamma(p.alpha2 + d) / (ga2 * std::tgamma(d + 2)) * gx *
                        std::pow(y, -p.alpha2);
  const double jy_pos = -r * (1 - r) * std::tgamma(p.alpha2 - r) / (ga2 * std::tgamma(2 - r)) *
                        std::pow(y, r - p.alpha2);
  double expected = -p.a1 * std::pow(x, p.p1 + 1) * gxx_dx;
  expected += p.a2 * std::pow(x, p.p2 + 2) * g_dxx;
  expected += p.a3 * std::pow(x, p.p3 + p.alpha1) * jx;
  expected += -p.b1 * std::pow(y, p.q1 + 1) * g_dy;
  expected += p.b2 * std::pow(y, p.q2 + 2) * g_dyy;
  expected += p.b3 * std::pow(y, p.q3 + p.alpha2) * (jy_neg + jy_pos);
  expected += -p.eta1 * std::pow(x, p.theta1) * std::pow(y, p.kappa1) * gxx_dx;
  expected += -p.eta2 * std::pow(y, p.theta2) * std::pow(x, p.kappa2) * g_dy;

  auto g = make_power_ratio(PowerRatioShape{2, d, r});
  auto closed = apply_generator(p, *g, x, y, cfg);
  auto quad = apply_generator(p, *g, x, y, cfg, 0, JumpSource::quadrature);
  CHECK(std::abs(closed.total - expected) < 1e-8 * (1 + std::abs(expected)));
  CHECK(std::abs(quad.total - expected) < 1e-8 * (1 + std::abs(expected)));
}

TEST_CASE("total is the fixed-order sum of the terms") {
  QuadratureConfig cfg;
  auto g = make_power_ratio(PowerRatioShape{});
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 3);
  for (int i = 0; i < 100; ++i) {
    auto t = apply_generator(full_params(), *g, u(rng), u(rng), cfg);
    CHECK(t.total == sum_fixed_order(t));
  }
  auto p = full_params();
  p.eta1 = p.eta2 = 0;
  auto t = apply_generator(p, *g, 1.1, 0.9, cfg);
  CHECK(t.interaction_x == 0);
  CHECK(t.interaction_y == 0);
}

TEST_CASE("generator is linear term by term") {
  QuadratureConfig cfg;
  auto p = full_params();
  auto g1 = make_power_ratio(PowerRatioShape{});
  auto g2 = make_exp_ratio(ExpRatioShape{});
  const double c = -1.7;
  auto s = make_sum(g1, c, g2);
  for (double x : {0.3, 1.4}) {
    for (double y : {0.5, 2.2}) {
      auto a = apply_generator(p, *g1, x, y, cfg, 0, JumpSource::quadrature);
      auto b = apply_generator(p, *g2, x, y, cfg, 0, JumpSource::quadrature);
      auto t = apply_generator(p, *s, x, y, cfg, 0, JumpSource::quadrature);
      auto near = [](double l, double r) { return std::abs(l - r) <= 1e-10 * (1 + std::abs(r)); };
      CHECK(near(t.drift_x, a.drift_x + c * b.drift_x));
      CHECK(near(t.diff_x, a.diff_x + c * b.diff_x));
      CHECK(near(t.jump_x, a.jump_x + c * b.jump_x));
      CHECK(near(t.drift_y, a.drift_y + c * b.drift_y));
      CHECK(near(t.diff_y, a.diff_y + c * b.diff_y));
      CHECK(near(t.jump_y, a.jump_y + c * b.jump_y));
      CHECK(near(t.interaction_x, a.interaction_x + c * b.interaction_x));
      CHECK(near(t.interaction_y, a.interaction_y + c * b.interaction_y));
    }
  }
}

TEST_CASE("diffusion and jump terms are nonpositive at the maximum of a bump") {
  QuadratureConfig cfg;
  auto p = full_params();
  BumpShape sx{1, 3, 1, 1}, sy{0.5, 2, 1, 1};
  auto g = make_bump_product(sx, sy);
  // Maximum of exp(-l/(t-a) - l/(b-t)) is at the midpoint when lambda1 = 1.
  auto t = apply_generator_relative(p, *g, 2.0, 1.25, cfg);
  CHECK(t.diff_x <= 0);
  CHECK(t.diff_y <= 0);
  CHECK(t.jump_x <= 0);
  CHECK(t.jump_y <= 0);
}

TEST_CASE("relative generator equals the plain one divided by g") {
  QuadratureConfig cfg;
  auto p = full_params();
  auto g = make_exp_ratio(ExpRatioShape{});
  auto plain = apply_generator(p, *g, 0.8, 1.2, cfg);
  auto rel = apply_generator_relative(p, *g, 0.8, 1.2, cfg);
  const double v = g->jet(0.8, 1.2).value;
  CHECK(rel.total == doctest::Approx(plain.total / v).epsilon(1e-9));
  CHECK(rel.jump_y == doctest::Approx(plain.jump_y / v).epsilon(1e-9));
  CHECK_THROWS_AS(apply_generator_relative(p, *make_bump(BumpShape{}), 0.5, 1, cfg), DomainError);
}

TEST_CASE("exp_ratio jump-integral bounds hold against quadrature") {
  QuadratureConfig cfg;
  auto m = make_stable_measure(1.5);
  for (auto s : {ExpRatioShape{1, 0.5, 1}, ExpRatioShape{2, 0.25, 2}, ExpRatioShape{0.5, 0.9, 0.5}}) {
    auto g = make_exp_ratio(s);
    for (double x : {0.25, 0.5, 2.0}) {
      for (double y : {0.1, 0.5, 3.0}) {
        auto b = exp_ratio_bounds(s, x, y, m, m);
        const double jx = jump_integral(*g, x, y, Axis::first, m, cfg);
        const double jy = jump_integral(*g, x, y, Axis::second, m, cfg);
        INFO("x=", x, " y=", y);
        CHECK(jx >= b.jump_x - 1e-9);
        CHECK(jy >= b.jump_y - 1e-9);
      }
    }
  }
}

TEST_CASE("supplied jump values override quadrature") {
  QuadratureConfig cfg;
  auto p = full_params();
  auto g = make_exp_ratio(ExpRatioShape{});
  JumpValues jv;
  jv.first = 2.0;
  auto t = apply_generator(p, *g, 1, 1, cfg, 0, JumpSource::quadrature, &jv);
  CHECK(t.jump_x == doctest::Approx(p.a3 * 2.0));
}
