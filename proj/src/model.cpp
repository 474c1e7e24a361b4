#include "lvlab/model.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "lvlab/errors.hpp"

namespace lvlab {

namespace {

struct ParamField {
  const char* name;
  double ModelParams::*ptr;
};

const std::array<ParamField, 22> kFields{{
    {"a1", &ModelParams::a1},         {"a2", &ModelParams::a2},
    {"a3", &ModelParams::a3},         {"p1", &ModelParams::p1},
    {"p2", &ModelParams::p2},         {"p3", &ModelParams::p3},
    {"alpha1", &ModelParams::alpha1}, {"eta1", &ModelParams::eta1},
    {"theta1", &ModelParams::theta1}, {"kappa1", &ModelParams::kappa1},
    {"b1", &ModelParams::b1},         {"b2", &ModelParams::b2},
    {"b3", &ModelParams::b3},         {"q1", &ModelParams::q1},
    {"q2", &ModelParams::q2},         {"q3", &ModelParams::q3},
    {"alpha2", &ModelParams::alpha2}, {"eta2", &ModelParams::eta2},
    {"theta2", &ModelParams::theta2}, {"kappa2", &ModelParams::kappa2},
    {"x0", &ModelParams::x0},         {"y0", &ModelParams::y0},
}};

void require(bool ok, const char* field, const char* reason) {
  if (!ok) throw ConstraintViolation(field, reason);
}

void require_nonneg_finite(double v, const char* field) {
  require(std::isfinite(v), field, "must be finite");
  require(v >= 0, field, "must be nonnegative");
}

struct Effective {
  double exponent;
  double coeff;
};

Effective effective(std::array<double, 3> c, std::array<double, 3> e) {
  double best = std::numeric_limits<double>::infinity();
  for (int j = 0; j < 3; ++j) {
    if (c[j] > 0 && e[j] < best) best = e[j];
  }
  double sum = 0;
  for (int j = 0; j < 3; ++j) {
    if (c[j] > 0 && e[j] == best) sum += c[j];
  }
  return {best, sum};
}

}  // namespace

const ModelParams& validate(const ModelParams& m, Validation mode) {
  require(std::isfinite(m.alpha1) && m.alpha1 > 1 && m.alpha1 < 2, "alpha1", "must lie in (1,2)");
  require(std::isfinite(m.alpha2) && m.alpha2 > 1 && m.alpha2 < 2, "alpha2", "must lie in (1,2)");
  for (const auto& f : kFields) {
    std::string n = f.name;
    if (n == "alpha1" || n == "alpha2") continue;
    require_nonneg_finite(m.*(f.ptr), f.name);
  }
  require(m.kappa1 > 0, "kappa1", "must be positive");
  require(m.kappa2 > 0, "kappa2", "must be positive");
  require(m.x0 > 0, "x0", "must be positive");
  require(m.y0 > 0, "y0", "must be positive");
  if (mode == Validation::strict) {
    require(m.eta1 > 0, "eta1", "must be positive");
    require(m.eta2 > 0, "eta2", "must be positive");
    require(m.a2 + m.a3 > 0, "a2+a3", "need a diffusion or jump term for X");
    require(m.b2 + m.b3 > 0, "b2+b3", "need a diffusion or jump term for Y");
  }
  return m;
}

DerivedExponents derived_exponents(const ModelParams& m) {
  auto x = effective({m.a1, m.a2, m.a3}, {m.p1, m.p2, m.p3});
  auto y = effective({m.b1, m.b2, m.b3}, {m.q1, m.q2, m.q3});
  return {x.exponent, y.exponent, x.coeff, y.coeff};
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::NoExtinctionEither: return "NoExtinctionEither";
    case Verdict::NoExtinctionY: return "NoExtinctionY";
    case Verdict::PartialExtinctionY: return "PartialExtinctionY";
    case Verdict::SureExtinctionY: return "SureExtinctionY";
    case Verdict::ConjecturedSureExtinctionY: return "ConjecturedSureExtinctionY";
    case Verdict::ConjecturedPartialExtinctionY: return "ConjecturedPartialExtinctionY";
    case Verdict::Unsettled: return "Unsettled";
  }
  return "Unsettled";
}

Verdict verdict_from_string(const std::string& s) {
  for (auto v : {Verdict::NoExtinctionEither, Verdict::NoExtinctionY, Verdict::PartialExtinctionY,
                 Verdict::SureExtinctionY, Verdict::ConjecturedSureExtinctionY,
                 Verdict::ConjecturedPartialExtinctionY, Verdict::Unsettled}) {
    if (to_string(v) == s) return v;
  }
  throw ConfigError("unknown verdict '" + s + "'");
}

RegimeVerdict classify(const ModelParams& m, double margin) {
  const auto d = derived_exponents(m);
  const double p = d.p, q = d.q, a = d.a, b = d.b;
  const double t1 = m.theta1, t2 = m.theta2, k1 = m.kappa1, k2 = m.kappa2;
  const double e1 = m.eta1, e2 = m.eta2;
  const double inf = std::numeric_limits<double>::infinity();

  auto lt = [&](double l, double r) { return l < r - margin; };
  auto gt = [&](double l, double r) { return l > r + margin; };
  auto eq = [&](double l, double r) { return std::abs(l - r) <= margin; };
  auto ge = [&](double l, double r) { return l >= r - margin; };
  auto ratio = [&](double n, double den) { return den > 0 ? n / den : inf; };

  RegimeVerdict out;
  auto& bq = out.boundary_quantities;
  bq["p"] = p;
  bq["q"] = q;
  bq["a"] = a;
  bq["b"] = b;
  bq["theta1"] = t1;
  bq["theta2"] = t2;

  if (ge(t2, 1)) {
    out.fired_conditions.push_back("theta2>=1");
    if (ge(t1, 1)) {
      out.fired_conditions.push_back("theta1>=1");
      out.verdict = Verdict::NoExtinctionEither;
    } else {
      out.verdict = Verdict::NoExtinctionY;
    }
    return out;
  }

  const double s = q + 1 - t2;  // > 0 from here on
  const double ratio_threshold = k2 * q / s;
  const double critical = k2 * (q - k1) / s;
  const double b_over_a = ratio(b, a);
  const double b_over_eta1 = ratio(b, e1);
  const double k2_over_1mt2 = k2 / (1 - t2);
  const double k2_over_k1p1mt2 = k2 / (k1 + 1 - t2);
  bq["kappa2*q/(q+1-theta2)"] = ratio_threshold;
  bq["kappa2*(q-kappa1)/(q+1-theta2)"] = critical;
  bq["theta1-1"] = t1 - 1;
  bq["b/a"] = b_over_a;
  bq["b/eta1"] = b_over_eta1;
  bq["kappa2/(1-theta2)"] = k2_over_1mt2;
  bq["kappa2/(kappa1+1-theta2)"] = k2_over_k1p1mt2;

  // Critical-line comparison used by both conjectures.
  const double crit_lhs = (t1 - 1) * e1 / s;
  double crit_rhs = std::numeric_limits<double>::quiet_NaN();
  if (q > k1) {
    crit_rhs = std::pow(e2, (q - k1) / s) * std::pow(b * (q - k1) / (k1 + 1 - t2), (1 + k1 - t2) / s);
  }
  bq["critical_line_lhs"] = crit_lhs;
  bq["critical_line_rhs"] = crit_rhs;

  // Balanced-exponent comparison (p on the ratio threshold with p, q > 0).
  double bal_lhs = std::numeric_limits<double>::quiet_NaN();
  double bal_rhs = std::numeric_limits<double>::quiet_NaN();
  if (q > 0) {
    bal_lhs = a * p / (q * s);
    bal_rhs = std::pow(b / (1 - t2), (1 - t2) / s) * std::pow(e2 / q, q / s);
  }
  bq["balanced_lhs"] = bal_lhs;
  bq["balanced_rhs"] = bal_rhs;

  const bool theta1_ok = ge(t1, 1);
  if (theta1_ok) {
    bool iia = lt(p, ratio_threshold);
    bool iib = eq(p, 0) && eq(q, 0) && lt(b_over_a, k2_over_1mt2);
    bool iic = lt(t1 - 1, critical);
    bool iid = eq(t1, 1) && eq(q, k1) && lt(b_over_eta1, k2_over_k1p1mt2);
    if (iia) out.fired_conditions.push_back("partial(a)");
    if (iib) out.fired_conditions.push_back("partial(b)");
    if (iic) out.fired_conditions.push_back("partial(c)");
    if (iid) out.fired_conditions.push_back("partial(d)");
    if (!out.fired_conditions.empty()) {
      out.verdict = Verdict::PartialExtinctionY;
      return out;
    }
    if (gt(t1 - 1, critical)) {
      bool iiia = gt(p, ratio_threshold);
      bool iiib = eq(p, 0) && eq(q, 0) && gt(b_over_a, k2_over_1mt2);
      if (iiia) out.fired_conditions.push_back("sure(a)");
      if (iiib) out.fired_conditions.push_back("sure(b)");
      if (!out.fired_conditions.empty()) {
        out.fired_conditions.insert(out.fired_conditions.begin(), "sure:theta1-1>critical");
        out.verdict = Verdict::SureExtinctionY;
        return out;
      }
    }
  }

  // Conjectured sure extinction.
  const bool cond_a = gt(p, ratio_threshold);
  const bool cond_b = gt(p, 0) && gt(q, 0) && eq(p, ratio_threshold) && lt(bal_lhs, bal_rhs);
  // Requires q = 0, which cannot coexist with q > kappa1 in branch (i).
  const bool cond_c = eq(p, 0) && eq(q, 0) && gt(b_over_a, k2_over_1mt2);
  const bool any_abc = cond_a || cond_b || cond_c;
  auto tag_abc = [&](const std::string& head) {
    if (cond_a) out.fired_conditions.push_back(head + "(a')");
    if (cond_b) out.fired_conditions.push_back(head + "(b')");
    if (cond_c) out.fired_conditions.push_back(head + "(c')");
  };
  const bool cs_i = gt(t1, 1) && gt(q, k1) && eq(t1 - 1, critical) && lt(crit_lhs, crit_rhs) && any_abc;
  const bool cs_ii = eq(t1, 1) && eq(q, k1) && gt(b_over_eta1, k2_over_k1p1mt2) && any_abc;
  const bool cs_iii = gt(t1 - 1, critical) && cond_b;
  if (cs_i) tag_abc("conjectured_sure(i)");
  if (cs_ii) tag_abc("conjectured_sure(ii)");
  if (cs_iii) out.fired_conditions.push_back("conjectured_sure(iii)(b')");
  if (!out.fired_conditions.empty()) {
    out.verdict = Verdict::ConjecturedSureExtinctionY;
    return out;
  }

  if (theta1_ok) {
    bool cp_i = gt(p, 0) && gt(q, 0) && eq(p, ratio_threshold) && gt(bal_lhs, bal_rhs);
    bool cp_ii = gt(t1, 1) && gt(q, k1) && eq(t1 - 1, critical) && gt(crit_lhs, crit_rhs);
    if (cp_i) out.fired_conditions.push_back("conjectured_partial(i)");
    if (cp_ii) out.fired_conditions.push_back("conjectured_partial(ii)");
    if (!out.fired_conditions.empty()) {
      out.verdict = Verdict::ConjecturedPartialExtinctionY;
      return out;
    }
  }

  out.verdict = Verdict::Unsettled;
  return out;
}

std::string verdict_to_json(const RegimeVerdict& v, int indent) {
  nlohmann::ordered_json j;
  j["verdict"] = to_string(v.verdict);
  j["fired_conditions"] = v.fired_conditions;
  auto bq = nlohmann::ordered_json::object();
  for (const auto& [k, x] : v.boundary_quantities) {
    if (std::isfinite(x)) {
      bq[k] = x;
    } else {
      bq[k] = nullptr;
    }
  }
  j["boundary_quantities"] = bq;
  return j.dump(indent);
}

const std::vector<std::string>& param_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& f : kFields) {
      n.emplace_back(f.name);
    }
    return n;
  }();
  return names;
}

void apply_param(ModelParams& params, const std::string& name, double value) {
  for (const auto& f : kFields) {
    if (name == f.name) {
      params.*(f.ptr) = value;
      return;
    }
  }
  throw ConfigError("unknown model parameter '" + name + "'");
}

double get_param(const ModelParams& params, const std::string& name) {
  for (const auto& f : kFields) {
    if (name == f.name) return params.*(f.ptr);
  }
  throw ConfigError("unknown model parameter '" + name + "'");
}

ModelParams params_from_config(const KeyValueConfig& cfg) {
  ModelParams m;
  for (const auto& f : kFields) {
    m.*(f.ptr) = cfg.get_double(f.name, m.*(f.ptr));
  }
  return m;
}

std::string canonical_string(const ModelParams& m) {
  std::string out;
  char buf[64];
  for (const auto& f : kFields) {
    std::snprintf(buf, sizeof buf, "%s=%.17g;", f.name, m.*(f.ptr));
    out += buf;
  }
  return out;
}

}  // namespace lvlab
