#pragma once

#include <map>
#include <string>
#include <vector>

#include "lvlab/config.hpp"

namespace lvlab {

struct ModelParams {
  // X: drift a1 x^{p1+1}, diffusion sqrt(2 a2 x^{p2+2}), jumps at level a3 x^{p3+alpha1}
  double a1 = 0, a2 = 0, a3 = 0;
  double p1 = 0, p2 = 0, p3 = 0;
  double alpha1 = 1.5;
  double eta1 = 1, theta1 = 1, kappa1 = 1;
  // Y
  double b1 = 0, b2 = 0, b3 = 0;
  double q1 = 0, q2 = 0, q3 = 0;
  double alpha2 = 1.5;
  double eta2 = 1, theta2 = 1, kappa2 = 1;

  double x0 = 1, y0 = 1;
};

// Strict mode additionally requires a2 + a3 > 0 and b2 + b3 > 0.
// Relaxed mode also admits eta_i = 0 so the engine can run the decoupled system.
enum class Validation { strict, relaxed };

const ModelParams& validate(const ModelParams& params, Validation mode = Validation::strict);

struct DerivedExponents {
  double p = 0;
  double q = 0;
  double a = 0;
  double b = 0;
};

// Minimum exponent over active terms (coefficient > 0) and the summed coefficient at it.
DerivedExponents derived_exponents(const ModelParams& params);

enum class Verdict {
  NoExtinctionEither,
  NoExtinctionY,
  PartialExtinctionY,
  SureExtinctionY,
  ConjecturedSureExtinctionY,
  ConjecturedPartialExtinctionY,
  Unsettled,
};

std::string to_string(Verdict v);
Verdict verdict_from_string(const std::string& s);

struct RegimeVerdict {
  Verdict verdict = Verdict::Unsettled;
  std::vector<std::string> fired_conditions;
  std::map<std::string, double> boundary_quantities;
};

// Comparisons use an absolute margin; values within it count as equal, so strict
// inequalities need to clear the margin.
RegimeVerdict classify(const ModelParams& params, double margin = 1e-12);

std::string verdict_to_json(const RegimeVerdict& v, int indent = 2);

ModelParams params_from_config(const KeyValueConfig& cfg);
void apply_param(ModelParams& params, const std::string& name, double value);
double get_param(const ModelParams& params, const std::string& name);
const std::vector<std::string>& param_names();
// Canonical "name=value" listing at full precision, used for digests.
std::string canonical_string(const ModelParams& params);

}  // namespace lvlab
