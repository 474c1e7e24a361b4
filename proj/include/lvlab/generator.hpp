#pragma once

#include <optional>

#include "lvlab/model.hpp"
#include "lvlab/quadrature.hpp"
#include "lvlab/stable_measure.hpp"
#include "lvlab/test_functions.hpp"

namespace lvlab {

struct GeneratorTerms {
  double drift_x = 0;
  double diff_x = 0;
  double jump_x = 0;
  double drift_y = 0;
  double diff_y = 0;
  double jump_y = 0;
  double interaction_x = 0;
  double interaction_y = 0;
  double total = 0;

  // Sum of absolute term values; used to normalize margins.
  double magnitude() const;
};

// g(x+z,y) - g(x,y) - g_x(x,y) z and the analogue in y.
double k1(const TestFunction& g, double x, double y, double z);
double k2(const TestFunction& g, double x, double y, double z);

// int_0^inf K^axis g(x,y) mu(dz), scaled by exp(-log_ref).
double jump_integral(const TestFunction& g, double x, double y, Axis axis, const StableMeasure& m,
                     const QuadratureConfig& cfg, double log_ref = 0);
double jump_integral(const Profile& f, double t, const StableMeasure& m, const QuadratureConfig& cfg,
                     double log_ref = 0);

// int K f(t) mu(dz) / f(t) for a profile with finite support end, computed from log-value
// differences so that huge ratios f(t+z)/f(t) do not overflow intermediate steps. Returns
// +inf when the ratio exceeds the double range somewhere on the support.
double relative_jump_integral(const Profile& f, double t, const StableMeasure& m, const QuadratureConfig& cfg);

enum class JumpSource { closed_form_if_available, quadrature };

// Jump integrals supplied by the caller (already scaled by exp(-log_ref)).
struct JumpValues {
  std::optional<double> first;
  std::optional<double> second;
};

// All terms of the generator at (x,y), scaled by exp(-log_ref).
GeneratorTerms apply_generator(const ModelParams& params, const TestFunction& g, double x, double y,
                               const QuadratureConfig& cfg, double log_ref = 0,
                               JumpSource source = JumpSource::closed_form_if_available,
                               const JumpValues* supplied = nullptr);

// Terms of (Lg)/g, evaluated in log space; g must be positive at (x,y).
GeneratorTerms apply_generator_relative(const ModelParams& params, const TestFunction& g, double x, double y,
                                        const QuadratureConfig& cfg,
                                        JumpSource source = JumpSource::closed_form_if_available,
                                        const JumpValues* supplied = nullptr);

}  // namespace lvlab
