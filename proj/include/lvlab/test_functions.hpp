#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "lvlab/stable_measure.hpp"

namespace lvlab {

struct ModelParams;
class Profile;

enum class Family {
  log_sum,
  log_x,
  exp_tan,
  power_ratio,
  exp_ratio,
  bump,
  bump_product,
  polynomial,
  linear_combination,
};

std::string to_string(Family f);

enum class Axis { first, second };

// Value and pure partials. All entries are multiplied by exp(-log_ref) so callers can
// work relative to a reference magnitude.
struct Jet {
  double value = 0;
  double dx = 0;
  double dy = 0;
  double dxx = 0;
  double dyy = 0;
};

struct Rect {
  double x_lo = 0;
  double x_hi = std::numeric_limits<double>::infinity();
  double y_lo = 0;
  double y_hi = std::numeric_limits<double>::infinity();
  bool contains(double x, double y) const { return x > x_lo && x < x_hi && y > y_lo && y < y_hi; }
};

class TestFunction {
 public:
  virtual ~TestFunction() = default;

  virtual Family family() const = 0;
  virtual std::string describe() const = 0;
  // Open set where the function is positive and smooth. Functions extended by zero
  // (bumps, exp_tan) may still be evaluated outside it.
  virtual Rect domain() const { return {}; }

  virtual Jet jet(double x, double y, double log_ref = 0) const = 0;
  // log g(x,y); -inf where g vanishes.
  virtual double log_value(double x, double y) const;

  // g(x,y) = f(x) h(y): relative jump integrals then depend on one coordinate only.
  virtual bool separable() const { return false; }

  // Closed-form values of int K^1 g mu1(dz) and int K^2 g mu2(dz), when known.
  virtual std::optional<std::pair<double, double>> closed_jump_integrals(
      double x, double y, const StableMeasure& m1, const StableMeasure& m2) const;

  // Growth power of the jump remainder along an axis (1 for at most linear growth).
  virtual double tail_growth(Axis) const { return 1.0; }

  // One-variable factor along an axis for separable functions, else null.
  virtual const Profile* factor(Axis) const { return nullptr; }
};

using TestFunctionPtr = std::shared_ptr<const TestFunction>;

// One-variable factor of a separable function.
struct Jet1 {
  double value = 0;
  double d1 = 0;
  double d2 = 0;
};

class Profile {
 public:
  virtual ~Profile() = default;
  virtual double log_value(double t) const = 0;
  // Derivatives divided by the value; only called where log_value is finite.
  virtual void relative_derivatives(double t, double& r1, double& r2) const = 0;
  virtual std::string describe() const = 0;
  // log f(t+z) - log f(t); profiles override this when the plain difference cancels badly.
  virtual double log_ratio(double t, double z) const { return log_value(t + z) - log_value(t); }
  // The profile vanishes from here on (infinity if it never does).
  virtual double support_end() const { return std::numeric_limits<double>::infinity(); }

  Jet1 jet(double t, double log_ref = 0) const;
};

using ProfilePtr = std::shared_ptr<const Profile>;

// exp(-lambda/(t-left) - lambda*lambda1/(right-t)) on (left, right), zero elsewhere.
struct BumpShape {
  double left = 1;
  double right = 3;
  double lambda = 10;
  double lambda1 = 1;
};

ProfilePtr make_bump_profile(const BumpShape& s);
ProfilePtr make_constant_profile();

struct PowerRatioShape {
  double beta = 2;
  double delta = 0.25;
  double rho = 0.5;
};

struct ExpRatioShape {
  double lambda = 1;
  double r = 0.5;
  double beta = 1;
};

struct ExpTanShape {
  double lambda1 = 2;
  double lambda2 = 2;
  double rho = 0.25;
  double delta = 1.5;
  double blend_lo = 0.3;
  double blend_hi = 0.7;
};

// ln(n + n^beta) - ln(x + y^beta)
TestFunctionPtr make_log_sum(double n, double beta);
// 1 - ln(x/n) on (0, n], flat from n + 1 on, C^2 quintic blend in between.
TestFunctionPtr make_log_x(double n);
// exp(-lambda1 g0(x) - lambda2 tan(pi y / 2)^rho) on (0,1)^2, zero elsewhere.
// When params is given, also checks rho < 1 - theta2 and the lower bound on delta.
TestFunctionPtr make_exp_tan(const ExpTanShape& s, const ModelParams* params = nullptr);
// x^{beta delta} y^{-delta} + y^rho
TestFunctionPtr make_power_ratio(const PowerRatioShape& s);
// exp(-lambda u^r) with u = y x^{-beta}
TestFunctionPtr make_exp_ratio(const ExpRatioShape& s);
// Bump in x, constant in y.
TestFunctionPtr make_bump(const BumpShape& s);
TestFunctionPtr make_bump_product(const BumpShape& sx, const BumpShape& sy);
TestFunctionPtr make_separable(ProfilePtr fx, ProfilePtr fy, Family family, std::string description);
// c0 + cx x + cy y + cxx x^2 + cyy y^2
TestFunctionPtr make_polynomial(double c0, double cx, double cy, double cxx, double cyy);
// g1 + c g2
TestFunctionPtr make_sum(TestFunctionPtr g1, double c, TestFunctionPtr g2);

// Lower bounds for the exp_ratio family: second partials and both jump integrals.
struct ExpRatioBounds {
  double dxx = 0;
  double dyy = 0;
  double jump_x = 0;
  double jump_y = 0;
};
ExpRatioBounds exp_ratio_bounds(const ExpRatioShape& s, double x, double y, const StableMeasure& m1,
                                const StableMeasure& m2);

// Quintic Hermite interpolant on [a,b] matching value, first and second derivative at both ends.
struct HermiteEnds {
  double v0, d0, s0;
  double v1, d1, s1;
};
Jet1 quintic_blend(const HermiteEnds& e, double a, double b, double t);

}  // namespace lvlab
