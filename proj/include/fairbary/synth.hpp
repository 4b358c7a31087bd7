#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairbary/maps.hpp"
#include "fairbary/measures.hpp"
#include "fairbary/metrics.hpp"
#include "fairbary/potentials.hpp"
#include "fairbary/random.hpp"
#include "fairbary/regression.hpp"

namespace fairbary {

enum class ScenarioKind { kTranslation, kGaussian, kNonlinear };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);

/// One-feature synthetic model Y = f*_s(X) + noise, noise resampled until Y
/// lands in omega.
struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kTranslation;
  Weights w = Weights::uniform(2);
  std::vector<double> shifts;                        // translation: f*_s = x + c_s
  std::vector<std::pair<double, double>> gaussian;   // gaussian: f*_s = sigma_s x + m_s, as (m, sigma)
  std::vector<std::array<double, 3>> links;          // nonlinear: a + b x + c x^2
  double noise_sd = 0.1;
  DomainInterval omega{0.0, 2.0};
  double x_lo = 0.3;     // translation feature range
  double x_hi = 1.3;
  double x_trunc = 2.4;  // gaussian feature truncation |x| <= x_trunc
  LipschitzBound lip{2.0};
  std::uint64_t seed = 0;

  static ScenarioSpec defaults(ScenarioKind kind);
  std::size_t groups() const { return w.size(); }
  /// Throws ConfigError on inconsistent parameters or when more than 1% of a
  /// group's outcome mass would fall outside omega before truncation.
  void validate() const;

  /// Regression function of group s.
  double f_star(std::size_t s, double x) const;
  /// Quantile function of the feature law.
  double feature_quantile(double t) const;
  /// Quantile function of f*_s(X).
  double prediction_quantile(std::size_t s, double t) const;
  /// Fraction of group s outcome mass outside omega before truncation.
  double mass_outside(std::size_t s) const;
};

struct GroundTruth {
  std::vector<MonotoneMap> theta_star;  // barycenter maps of the laws of f*_s(X)
  QuadratureSpec prediction_laws;       // quantile functions of f*_s(X)
  double poincare_constant = 0.0;       // largest over groups; metadata only

  /// max |sum_s w_s theta*_s^{-1}(z) - z| on a dense grid around omega.
  double congruency_residual(const Weights& w, std::size_t points = 4096) const;
};

GroundTruth make_truth(const ScenarioSpec& spec);

/// Fair Bayes-optimal prediction theta*_s(f*_s(x)).
double fair_bayes(const ScenarioSpec& spec, const GroundTruth& truth, std::size_t s, double x);

FeatureMatrix sample_features(const ScenarioSpec& spec, std::size_t n, Rng& rng);

struct Generated {
  std::vector<GroupSample> samples;
  GroundTruth truth;
};

/// Deterministic in spec.seed; group s draws from its own derived stream.
Generated generate(const ScenarioSpec& spec, std::span<const std::size_t> n_per_group);

/// Evaluation features: fresh draws (empirical mode, seeded by eval.seed) or
/// feature-quantile midpoints (quadrature mode).
std::vector<FeatureMatrix> evaluation_features(const ScenarioSpec& spec, const EvalSpec& eval);

/// d^2_{mu_X}(candidate, fair Bayes-optimal).
double truth_error(const FairRegressor& candidate, const GroundTruth& truth,
                   const ScenarioSpec& spec, const EvalSpec& eval);

}  // namespace fairbary
