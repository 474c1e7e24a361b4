#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "lvlab/errors.hpp"
#include "lvlab/generator.hpp"
#include "lvlab/model.hpp"
#include "lvlab/quadrature.hpp"
#include "lvlab/test_functions.hpp"

namespace lvlab {

// Finite-grid evidence for an inequality. Margins are normalized slacks (value of the
// checked difference over the sum of absolute contributions), so pass means every node
// had strictly positive slack. A certificate is not a proof.
struct GridNode {
  double c1 = 0;
  double c2 = 0;
  double margin = 0;
};

struct GridCertificate {
  std::string check;
  std::string region;
  std::string axis1 = "x";
  std::string axis2 = "y";
  int resolution = 0;
  std::size_t nodes = 0;
  std::size_t violations = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();
  double worst_c1 = std::numeric_limits<double>::quiet_NaN();
  double worst_c2 = std::numeric_limits<double>::quiet_NaN();
  bool pass = false;
  std::vector<std::string> notes;
  std::vector<GridNode> dump;  // filled when CriteriaOptions::keep_nodes is set
};

using ConstantsFound = std::vector<std::pair<std::string, double>>;

double constant(const ConstantsFound& c, const std::string& name);

struct CertifiedConstants {
  ConstantsFound constants;
  GridCertificate certificate;  // at the requested resolution
  GridCertificate refined;      // same constants, doubled resolution
  bool pass() const { return certificate.pass && refined.pass; }
};

class SearchFailed : public Error {
 public:
  SearchFailed(const std::string& what, GridCertificate best) : Error(what), best_(std::move(best)) {}
  const GridCertificate& best() const noexcept { return best_; }

 private:
  GridCertificate best_;
};

struct CriteriaOptions {
  int resolution = 200;
  int workers = 1;
  bool keep_nodes = false;
  // Depth of log-spaced grids below their upper end, in natural-log units.
  double log_depth = 69.0;
  QuadratureConfig quad;
};

enum class Direction { at_most, at_least };
std::string to_string(Direction d);

enum class Subcase { iia, iib, iic, iid, iiia, iiib };
std::string to_string(Subcase s);
Subcase subcase_from_string(const std::string& s);
// Tag the classifier reports when the subcase fires.
std::string classifier_tag(Subcase s);

enum class Spacing { linear, log, both_ends };

struct GridBox {
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
  Spacing x_spacing = Spacing::linear;
  Spacing y_spacing = Spacing::linear;
};

// n nodes on [lo, hi]. log needs lo > 0; both_ends clusters nodes geometrically toward
// both ends and never hits them.
std::vector<double> grid_nodes(double lo, double hi, int n, Spacing spacing);

// Normalized slack diff / scale with infinite values mapped to +-1.
double normalized_margin(double diff, double scale);

// Terms of Lg/g; separable factors with compact support use relative_jump_integral.
GeneratorTerms relative_generator(const ModelParams& params, const TestFunction& g, double x, double y,
                                  const QuadratureConfig& quad);

// Lg <= d g (at_most) or Lg >= d g (at_least) at every grid node. g must be positive on the box.
GridCertificate check_generator_bound(const ModelParams& params, const TestFunction& g, const GridBox& box,
                                      Direction direction, double d, const CriteriaOptions& opts);

// Upper bound d_n for L g_n with g_n the log_x family, with its integral constants.
struct LogXBound {
  double n = 1;
  double d = 0;
  double c_small = 0;  // int z^2 (1+z)^-2 mu(dz)
  double c_mid = 0;    // sup_{v >= 1/2} |g_n''(v)| int_0^{n+1} z^2 mu(dz)
  double c_large = 0;  // sup_{x >= 1/2} |g_n| mu((1/2, inf)) / 2 + int_{1/2}^{n+1} z mu(dz)
};
LogXBound log_x_bound(const ModelParams& params, double n, const QuadratureConfig& quad);
GridCertificate check_log_x_bound(const ModelParams& params, double n, const CriteriaOptions& opts);

// Searches the exp_tan weights so that Lg >= d g on (0,1)^2 with d > 0.
// Constants: lambda1, lambda2, rho, delta, d.
CertifiedConstants check_exp_tan(const ModelParams& params, const CriteriaOptions& opts);

// Positivity of the perturbed drift balance on {0 < x, y <= eps0, y x^-beta >= z*}.
// Constants: beta, delta, rho, rho1, sigma, eps0, z_star.
CertifiedConstants check_htilde_positivity(const ModelParams& params, Subcase subcase, const CriteriaOptions& opts);

// Evaluates the perturbed balance at one point from the constants above.
double htilde_value(const ModelParams& params, const ConstantsFound& c, double x, double y);

// H >= c0 on (0, eps)^2 for the exp_ratio construction. Constants: r, beta, eps, c0.
CertifiedConstants check_H_lower_bound(const ModelParams& params, Subcase subcase, const CriteriaOptions& opts);

// Young-type inequality u + v >= p^{1/p} q^{1/q} u^{1/p} v^{1/q} with 1/p + 1/q = 1.
double young_gap(double u, double v, double p);
GridCertificate check_young(std::size_t samples, std::uint64_t seed = 1);

// One-dimensional bump inequalities with left end 1, right end 3 and the interior point 2.
struct BumpLemmaReport {
  ConstantsFound constants;
  std::vector<GridCertificate> certificates;
  bool pass() const;
};
BumpLemmaReport check_bump_lemma(double alpha, const CriteriaOptions& opts);

// Lower bounds for exp_ratio partials and jump integrals against direct evaluation.
GridCertificate check_exp_ratio_bounds(std::size_t draws, std::uint64_t seed, const CriteriaOptions& opts);

// Target rectangle [x1,x2] x [y1,y2], envelope floor y3 for the second factor, start (x0,y0)
// with x1 < x0 < x2 and y3 < y0 < y1.
struct BumpTarget {
  double x1 = 1, x2 = 2, y1 = 1, y2 = 2, y3 = 0.25;
  double x0 = 1.5, y0 = 0.5;
};
// Constants: lambda, lambda_y, lambda1, lambda1_y, d.
CertifiedConstants check_prop24_bump(const ModelParams& params, const BumpTarget& target, const CriteriaOptions& opts);

// Lg <= 0 for g = x^{beta delta} y^{-delta} + y^rho on {0 < x, y <= eps0, y x^-beta > u*},
// plus positivity and finiteness on a compact box. Throws SearchFailed when it does not hold.
GridCertificate check_prop25_conditions(const ModelParams& params, const PowerRatioShape& shape, double u_star,
                                        double eps0, const CriteriaOptions& opts);

}  // namespace lvlab
