#include <doctest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "lvlab/config.hpp"
#include "lvlab/errors.hpp"
#include "lvlab/model.hpp"

using namespace lvlab;

namespace {

ModelParams base() {
  ModelParams m;
  m.a2 = 1;
  m.b2 = 1;
  m.x0 = m.y0 = 0.5;
  return m;
}

// Partial extinction example: p = 0, q = 1.
ModelParams partial_example() {
  ModelParams m;
  m.theta1 = 1;
  m.theta2 = 0.5;
  m.kappa1 = m.kappa2 = 1;
  m.a2 = 1;
  m.p2 = 0;
  m.b3 = 1;
  m.q3 = 1;
  return m;
}

ModelParams sure_example() {
  ModelParams m;
  m.theta1 = 2.5;
  m.theta2 = 0;
  m.kappa1 = m.kappa2 = 1;
  m.a3 = 1;
  m.p3 = 1;
  m.b3 = 1;
  m.q3 = 2;
  return m;
}

ModelParams critical_line_example() {
  ModelParams m;
  m.theta1 = 1.4;
  m.theta2 = 0.5;
  m.kappa1 = m.kappa2 = 1;
  m.b3 = 1;
  m.q3 = 2;
  m.eta1 = 10;
  m.eta2 = 1;
  m.a3 = 1;
  m.p3 = 1;
  return m;
}

bool has_tag(const RegimeVerdict& v, const std::string& t) {
  for (const auto& s : v.fired_conditions) {
    if (s == t) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("validate accepts a plain parameter set") {
  auto m = base();
  CHECK_NOTHROW(validate(m));
}

TEST_CASE("validate rejects stable index at the boundary") {
  auto m = base();
  m.alpha1 = 2.0;
  try {
    validate(m);
    FAIL("expected ConstraintViolation");
  } catch (const ConstraintViolation& e) {
    CHECK(e.field() == "alpha1");
  }
  m.alpha1 = 1.0;
  CHECK_THROWS_AS(validate(m), ConstraintViolation);
}

TEST_CASE("validate needs diffusion or jumps in strict mode only") {
  auto m = base();
  m.a2 = 0;
  m.a3 = 0;
  try {
    validate(m);
    FAIL("expected ConstraintViolation");
  } catch (const ConstraintViolation& e) {
    CHECK(e.field() == "a2+a3");
  }
  CHECK_NOTHROW(validate(m, Validation::relaxed));
}

TEST_CASE("validate rejects negative exponents and nonpositive initial states") {
  auto m = base();
  m.p1 = -0.1;
  CHECK_THROWS_AS(validate(m), ConstraintViolation);
  m = base();
  m.x0 = 0;
  CHECK_THROWS_AS(validate(m), ConstraintViolation);
  m = base();
  m.kappa2 = 0;
  CHECK_THROWS_AS(validate(m), ConstraintViolation);
  m = base();
  m.eta1 = 0;
  CHECK_THROWS_AS(validate(m), ConstraintViolation);
  CHECK_NOTHROW(validate(m, Validation::relaxed));
}

TEST_CASE("derived exponents take the minimum over active terms") {
  ModelParams m;
  m.a1 = 2;
  m.p1 = 3;
  m.a2 = 0;
  m.p2 = 5;
  m.a3 = 1;
  m.p3 = 3;
  m.b1 = 0;
  m.b3 = 1;
  m.q3 = 1;
  auto d = derived_exponents(m);
  CHECK(d.p == 3);
  CHECK(d.a == 3);
  CHECK(d.q == 1);
  CHECK(d.b == 1);

  ModelParams n;
  n.a1 = 0;
  n.a2 = 1;
  n.p2 = 0;
  n.a3 = 0;
  n.p1 = 7;
  n.b2 = 1;
  auto e = derived_exponents(n);
  CHECK(e.p == 0);
  CHECK(e.a == 1);
}

TEST_CASE("classify: both self-exponents at least one") {
  auto m = base();
  m.theta1 = 1.5;
  m.theta2 = 1;
  auto v = classify(validate(m));
  CHECK(v.verdict == Verdict::NoExtinctionEither);
  CHECK_FALSE(v.fired_conditions.empty());

  m.theta1 = 0.5;
  CHECK(classify(m).verdict == Verdict::NoExtinctionY);
}

TEST_CASE("classify: partial extinction through the ratio threshold") {
  auto m = partial_example();
  validate(m);
  // kappa2 q / (q + 1 - theta2) = 1 / 1.5
  const double threshold = 1.0 * 1.0 / (1.0 + 1.0 - 0.5);
  CHECK(threshold == doctest::Approx(2.0 / 3.0));
  auto v = classify(m);
  CHECK(v.verdict == Verdict::PartialExtinctionY);
  CHECK(has_tag(v, "partial(a)"));
  CHECK(v.boundary_quantities.at("kappa2*q/(q+1-theta2)") == doctest::Approx(threshold));
  CHECK(v.boundary_quantities.at("p") == 0);
}

TEST_CASE("classify: sure extinction") {
  auto m = sure_example();
  validate(m);
  // critical = kappa2 (q - kappa1) / (q + 1 - theta2) = 1/3; threshold = 2/3
  auto v = classify(m);
  CHECK(v.verdict == Verdict::SureExtinctionY);
  CHECK(has_tag(v, "sure(a)"));
  CHECK(v.boundary_quantities.at("kappa2*(q-kappa1)/(q+1-theta2)") == doctest::Approx(1.0 / 3.0));
  CHECK(v.boundary_quantities.at("theta1-1") == doctest::Approx(1.5));
}

TEST_CASE("classify: conjectured partial on the critical line") {
  auto m = critical_line_example();
  validate(m);
  const double s = 2 + 1 - 0.5;
  const double lhs = 0.4 * 10 / s;
  const double rhs = std::pow(1.0, 1.0 / s) * std::pow(1.0 * 1.0 / 1.5, 1.5 / s);
  CHECK(lhs == doctest::Approx(1.6));
  CHECK(rhs == doctest::Approx(0.78405).epsilon(1e-4));
  auto v = classify(m);
  CHECK(v.verdict == Verdict::ConjecturedPartialExtinctionY);
  CHECK(has_tag(v, "conjectured_partial(ii)"));
  CHECK(v.boundary_quantities.at("critical_line_lhs") == doctest::Approx(lhs));
  CHECK(v.boundary_quantities.at("critical_line_rhs") == doctest::Approx(rhs));
}

TEST_CASE("classify: subcases b, c and d") {
  // b: p = q = 0, b/a = 1 < kappa2/(1-theta2) = 2
  ModelParams b;
  b.theta1 = 1;
  b.theta2 = 0.5;
  b.a2 = 1;
  b.b2 = 1;
  CHECK(has_tag(classify(b), "partial(b)"));

  // c: theta1 - 1 = 0.2 < kappa2 (q - kappa1)/(q+1-theta2) = 0.5
  ModelParams c;
  c.theta1 = 1.2;
  c.theta2 = 0.5;
  c.kappa1 = 0.5;
  c.a3 = 1;
  c.p3 = 1;
  c.b3 = 1;
  c.q3 = 1.5;
  auto vc = classify(c);
  CHECK(vc.verdict == Verdict::PartialExtinctionY);
  CHECK(has_tag(vc, "partial(c)"));
  CHECK_FALSE(has_tag(vc, "partial(a)"));

  // d: theta1 = 1, q = kappa1 = 1, b/eta1 = 0.5 < kappa2/(kappa1+1-theta2) = 2/3
  ModelParams d;
  d.theta1 = 1;
  d.theta2 = 0.5;
  d.a3 = 1;
  d.p3 = 1;
  d.b3 = 0.5;
  d.q3 = 1;
  auto vd = classify(d);
  CHECK(has_tag(vd, "partial(d)"));
  CHECK_FALSE(has_tag(vd, "partial(a)"));
}

TEST_CASE("classify: sure extinction with vanishing exponents") {
  // p = q = 0, b/a = 3 > kappa2/(1-theta2) = 2, theta1 - 1 = 0 > -kappa2 kappa1/(1.5)
  ModelParams m;
  m.theta1 = 1;
  m.theta2 = 0.5;
  m.a2 = 1;
  m.b2 = 3;
  auto v = classify(m);
  CHECK(v.verdict == Verdict::SureExtinctionY);
  CHECK(has_tag(v, "sure(b)"));
}

TEST_CASE("classify: exact boundary equality is not a theorem case") {
  // p equal to the ratio threshold 2/3 cannot be represented exactly; use q = 2, theta2 = 0:
  // threshold = kappa2 q/(q+1) = 2/3 again, so pick kappa2 = 1.5, q = 1, theta2 = 0: 0.75.
  ModelParams m;
  m.theta1 = 2;
  m.theta2 = 0;
  m.kappa2 = 1.5;
  m.b3 = 1;
  m.q3 = 1;
  m.a3 = 1;
  m.p3 = 0.75;
  auto v = classify(m);
  CHECK(v.verdict != Verdict::PartialExtinctionY);
  CHECK(v.verdict != Verdict::SureExtinctionY);
}

TEST_CASE("conjectured sure branch (i) with vanishing exponents can never fire") {
  // Branch (i) needs q > kappa1 > 0 while (c') needs q = 0; sweep q and confirm no tag.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 3);
  for (int i = 0; i < 2000; ++i) {
    ModelParams m;
    m.theta1 = 1 + u(rng);
    m.theta2 = u(rng) / 3.01;
    m.kappa1 = 0.1 + u(rng);
    m.kappa2 = 0.1 + u(rng);
    m.a2 = 1;
    m.b2 = 1;
    auto v = classify(m);
    CHECK_FALSE(has_tag(v, "conjectured_sure(i)(c')"));
  }
}

namespace {

// Independent re-evaluation of every condition, written out directly.
bool any_condition_holds(const ModelParams& m) {
  const double eps = 1e-12;
  const auto d = derived_exponents(m);
  const double p = d.p, q = d.q, a = d.a, b = d.b;
  const double t1 = m.theta1, t2 = m.theta2, k1 = m.kappa1, k2 = m.kappa2;
  if (t2 >= 1 - eps) return true;
  const double s = q + 1 - t2;
  const double thr = k2 * q / s;
  const double crit = k2 * (q - k1) / s;
  const bool p0q0 = std::abs(p) <= eps && std::abs(q) <= eps;
  bool out = false;
  if (t1 >= 1 - eps) {
    out |= p < thr - eps;
    out |= p0q0 && b / a < k2 / (1 - t2) - eps;
    out |= t1 - 1 < crit - eps;
    out |= std::abs(t1 - 1) <= eps && std::abs(q - k1) <= eps && b / m.eta1 < k2 / (k1 + 1 - t2) - eps;
    out |= t1 - 1 > crit + eps && (p > thr + eps || (p0q0 && b / a > k2 / (1 - t2) + eps));
  }
  double bal_l = NAN, bal_r = NAN, cl = (t1 - 1) * m.eta1 / s, cr = NAN;
  if (q > 0) {
    bal_l = a * p / (q * s);
    bal_r = std::pow(b / (1 - t2), (1 - t2) / s) * std::pow(m.eta2 / q, q / s);
  }
  if (q > k1) cr = std::pow(m.eta2, (q - k1) / s) * std::pow(b * (q - k1) / (k1 + 1 - t2), (1 + k1 - t2) / s);
  const bool ca = p > thr + eps;
  const bool cb = p > eps && q > eps && std::abs(p - thr) <= eps && bal_l < bal_r - eps;
  const bool cc = p0q0 && b / a > k2 / (1 - t2) + eps;
  out |= t1 > 1 + eps && q > k1 + eps && std::abs(t1 - 1 - crit) <= eps && cl < cr - eps && (ca || cb || cc);
  out |= std::abs(t1 - 1) <= eps && std::abs(q - k1) <= eps && b / m.eta1 > k2 / (k1 + 1 - t2) + eps &&
         (ca || cb || cc);
  out |= t1 - 1 > crit + eps && cb;
  if (t1 >= 1 - eps) {
    out |= p > eps && q > eps && std::abs(p - thr) <= eps && bal_l > bal_r + eps;
    out |= t1 > 1 + eps && q > k1 + eps && std::abs(t1 - 1 - crit) <= eps && cl > cr + eps;
  }
  return out;
}

ModelParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1);
  // Coarse grid values make boundary equalities likely.
  auto pick = [&](std::initializer_list<double> vals) {
    std::size_t i = static_cast<std::size_t>(u(rng) * vals.size());
    if (i >= vals.size()) i = vals.size() - 1;
    return *(vals.begin() + i);
  };
  ModelParams m;
  m.a1 = pick({0, 0.5, 1});
  m.a2 = pick({0, 1, 2});
  m.a3 = pick({0, 1});
  if (m.a2 + m.a3 == 0) m.a2 = 1;
  m.p1 = pick({0, 0.5, 1, 2});
  m.p2 = pick({0, 0.5, 1, 2});
  m.p3 = pick({0, 0.5, 1, 2});
  m.b1 = pick({0, 0.5, 1});
  m.b2 = pick({0, 1, 3});
  m.b3 = pick({0, 1});
  if (m.b2 + m.b3 == 0) m.b3 = 1;
  m.q1 = pick({0, 0.5, 1, 2});
  m.q2 = pick({0, 0.5, 1, 2});
  m.q3 = pick({0, 0.5, 1, 2});
  m.theta1 = pick({0.5, 1, 1.2, 1.5, 2.5});
  m.theta2 = pick({0, 0.5, 1, 1.5});
  m.kappa1 = pick({0.5, 1, 2});
  m.kappa2 = pick({0.5, 1, 2});
  m.eta1 = pick({0.5, 1, 10});
  m.eta2 = pick({0.5, 1, 5});
  m.alpha1 = 1 + 0.98 * u(rng) + 0.01;
  m.alpha2 = 1 + 0.98 * u(rng) + 0.01;
  return m;
}

}  // namespace

TEST_CASE("classify is exhaustive and Unsettled only when nothing fires") {
  std::mt19937_64 rng(2024);
  int unsettled = 0;
  for (int i = 0; i < 10000; ++i) {
    auto m = random_params(rng);
    validate(m);
    RegimeVerdict v;
    REQUIRE_NOTHROW(v = classify(m));
    const bool fired = any_condition_holds(m);
    if (v.verdict == Verdict::Unsettled) {
      ++unsettled;
      CHECK(v.fired_conditions.empty());
      CHECK_FALSE(fired);
    } else {
      CHECK_FALSE(v.fired_conditions.empty());
      CHECK(fired);
    }
    if (m.theta2 >= 1) {
      CHECK((v.verdict == Verdict::NoExtinctionEither || v.verdict == Verdict::NoExtinctionY));
    }
  }
  CHECK(unsettled > 0);
}

TEST_CASE("inactive coefficient pairs never change the verdict") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0, 3);
  for (int i = 0; i < 2000; ++i) {
    auto m = random_params(rng);
    auto v0 = classify(m);
    auto m2 = m;
    if (m2.a1 == 0) m2.p1 = u(rng);
    if (m2.a2 == 0) m2.p2 = u(rng);
    if (m2.a3 == 0) m2.p3 = u(rng);
    if (m2.b1 == 0) m2.q1 = u(rng);
    if (m2.b2 == 0) m2.q2 = u(rng);
    if (m2.b3 == 0) m2.q3 = u(rng);
    auto v1 = classify(m2);
    CHECK(v0.verdict == v1.verdict);
    CHECK(v0.fired_conditions == v1.fired_conditions);
  }
}

TEST_CASE("verdict JSON carries the three fields") {
  auto v = classify(partial_example());
  auto j = nlohmann::json::parse(verdict_to_json(v));
  CHECK(j["verdict"] == "PartialExtinctionY");
  CHECK(j["fired_conditions"].is_array());
  CHECK(j["boundary_quantities"]["q"] == 1.0);
}

TEST_CASE("config parsing") {
  auto cfg = KeyValueConfig::parse("# model\n a1 = 2  \ntheta2=0.5 # trailing\n\nx0 = 1e-3\n");
  auto m = params_from_config(cfg);
  CHECK(m.a1 == 2);
  CHECK(m.theta2 == 0.5);
  CHECK(m.x0 == 1e-3);
  CHECK(cfg.unused_keys().empty());

  CHECK_THROWS_AS(KeyValueConfig::parse("a1 2"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("a1 = 1\na1 = 2"), ConfigError);
  auto bad = KeyValueConfig::parse("a1 = two");
  CHECK_THROWS_AS(params_from_config(bad), ConfigError);
  auto extra = KeyValueConfig::parse("a1 = 1\nalpah1 = 1.5");
  params_from_config(extra);
  CHECK(extra.unused_keys() == std::set<std::string>{"alpah1"});
}

TEST_CASE("canonical string is stable and parameter sensitive") {
  auto m = partial_example();
  auto s1 = canonical_string(m);
  CHECK(s1 == canonical_string(m));
  m.eta2 = 1.0000000000000002;
  CHECK(s1 != canonical_string(m));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
