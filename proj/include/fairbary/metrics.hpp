#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fairbary/measures.hpp"
#include "fairbary/potentials.hpp"
#include "fairbary/regression.hpp"

namespace fairbary {

enum class EvalMode { kEmpirical, kQuadrature };

struct EvalSpec {
  EvalMode mode = EvalMode::kEmpirical;
  std::size_t resolution = std::size_t{1} << 14;
  std::vector<std::size_t> fresh_sample_sizes;  // per group; empty means 2^16 each
  std::uint64_t seed = 0;

  void validate(std::size_t groups) const;
  std::size_t fresh_size(std::size_t s) const;
};

using FeatureFn = std::function<double(std::span<const double>)>;
using ScalarFn = std::function<double(double)>;

/// d^2(f, g) = sum_s w_s mean_i (f_s(x_i) - g_s(x_i))^2 over the feature rows of group s.
double weighted_sq_distance(std::span<const FeatureFn> f, std::span<const FeatureFn> g,
                            std::span<const FeatureMatrix> xs, const Weights& w);
/// Same for scalar functions against empirical measures.
double weighted_sq_distance(std::span<const ScalarFn> f, std::span<const ScalarFn> g,
                            std::span<const EmpiricalMeasure> ms, const Weights& w);
/// Same by the midpoint rule in probability space.
double weighted_sq_distance(std::span<const ScalarFn> f, std::span<const ScalarFn> g,
                            const QuadratureSpec& spec, const Weights& w);

/// All W2 values use the half-quadratic convention.
struct UnfairnessReport {
  double upper_bound = 0.0;      // minimax centre bound
  double pairwise_max_w2 = 0.0;  // max_{s,t} W2(push_s, push_t)
  double ks_max = 0.0;           // max_{s,t} KS(push_s, push_t)
};

UnfairnessReport unfairness_of(std::span<const EmpiricalMeasure> pushforwards, const Weights& w);

/// Pushes each group's features through the fair regressor and measures the
/// disparity of the resulting output laws.
UnfairnessReport unfairness(const FairRegressor& fair, std::span<const FeatureMatrix> features,
                            const Weights& w);

struct FairnessCheck {
  bool pass = false;
  double lhs = 0.0;    // minimax centre bound of theta_n # mu_fhat
  double rhs = 0.0;    // sqrt(1 / (M w_min)) d(theta_n, theta*) + slack
  double distance = 0.0;
  double slack = 0.0;
};

/// Quantile slack of oracle maps interpolated on `oracle_grid`: |Omega| / #intervals.
double default_grid_slack(const KnotGrid& oracle_grid);

/// Checks inf_nu max_s W2(theta_n,s # m_s, nu) <= sqrt(1/(M w_min)) d_m(theta_n, theta*) + slack,
/// where m_s are samples of the base-prediction laws and theta* their oracle maps.
FairnessCheck check_fairness_bound(std::span<const MonotoneMap> fitted,
                                   std::span<const MonotoneMap> oracle,
                                   std::span<const EmpiricalMeasure> ms, const Weights& w,
                                   double slack);
FairnessCheck check_fairness_bound(const FairRegressor& fair, std::span<const MonotoneMap> oracle,
                                   std::span<const EmpiricalMeasure> ms, const Weights& w,
                                   double slack);

struct BernsteinCase {
  double sigma2 = 1.0;  // sum_s w_s Var(u_s)
  double b = 1.0;       // bound on |u_s - E u_s| over the support
  std::vector<double> t_grid;
  std::size_t n_reps = 10000;

  void validate() const;
};

struct BernsteinRow {
  double t = 0.0;
  double empirical_freq = 0.0;
  double bound = 0.0;
  double std_error = 0.0;  // binomial standard error at the bound
};

/// Variance and range constants of fixed potentials under the population
/// laws given by `spec` (quadrature).
BernsteinCase bernstein_constants(std::span<const PotentialPair> potentials,
                                  const QuadratureSpec& spec, const Weights& w);

/// Monte-Carlo tail frequencies of sum_s w_s (E_{n_s} - E) u_s with n_s = n_tilde w_s
/// (rounded up), drawn by inverse-transform sampling from spec's quantiles.
std::vector<BernsteinRow> bernstein_check(std::span<const PotentialPair> potentials,
                                          const QuadratureSpec& spec, const Weights& w,
                                          double n_tilde, const BernsteinCase& bcase,
                                          std::uint64_t seed);

}  // namespace fairbary
