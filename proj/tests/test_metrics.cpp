#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fairbary/error.hpp"
#include "fairbary/metrics.hpp"
#include "fairbary/random.hpp"

using namespace fairbary;

namespace {

const DomainInterval kOmega(0.0, 2.0);
const LipschitzBound kLip(2.0);

std::vector<double> grid_points(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * (i + 0.5) / n);
  return out;
}

}  // namespace

TEST(WeightedSqDistance, FeatureOverloadByHand) {
  const std::vector<FeatureFn> f{[](std::span<const double> x) { return x[0]; },
                                 [](std::span<const double> x) { return 2.0 * x[0]; }};
  const std::vector<FeatureFn> g{[](std::span<const double>) { return 0.0; },
                                 [](std::span<const double>) { return 0.0; }};
  const std::vector<FeatureMatrix> xs{FeatureMatrix::column({1.0, 3.0}),
                                      FeatureMatrix::column({1.0})};
  const Weights w({0.25, 0.75});
  // 0.25 * (1 + 9) / 2 + 0.75 * 4
  EXPECT_DOUBLE_EQ(weighted_sq_distance(f, g, xs, w), 4.25);
  const std::vector<FeatureMatrix> empty{FeatureMatrix::column({1.0}), FeatureMatrix()};
  EXPECT_THROW(weighted_sq_distance(f, g, empty, w), DomainError);
  EXPECT_THROW(weighted_sq_distance(f, g, xs, Weights::uniform(3)), DomainError);
}

TEST(WeightedSqDistance, ScalarOverloadsAgree) {
  const std::vector<ScalarFn> f{[](double z) { return z + 0.1; }, [](double z) { return z * z; }};
  const std::vector<ScalarFn> g{[](double z) { return z; }, [](double z) { return z; }};
  const Weights w({0.5, 0.5});
  const std::vector<EmpiricalMeasure> ms{EmpiricalMeasure({0.0, 1.0}), EmpiricalMeasure({2.0})};
  EXPECT_NEAR(weighted_sq_distance(f, g, ms, w), 0.5 * 0.01 + 0.5 * 4.0, 1e-15);

  QuadratureSpec spec;
  spec.quantiles = {[](double t) { return t; }, [](double t) { return t; }};
  spec.resolution = 4096;
  // E(Z^2 - Z)^2 for uniform Z is 1/30.
  EXPECT_NEAR(weighted_sq_distance(f, g, spec, w), 0.5 * 0.01 + 0.5 / 30.0, 1e-7);
}

TEST(Unfairness, IdenticalAndDisjointGroups) {
  const auto pts = grid_points(0.0, 1.0, 500);
  const std::vector<EmpiricalMeasure> same{EmpiricalMeasure(pts), EmpiricalMeasure(pts)};
  const auto r0 = unfairness_of(same, Weights::uniform(2));
  EXPECT_NEAR(r0.upper_bound, 0.0, 1e-12);
  EXPECT_NEAR(r0.pairwise_max_w2, 0.0, 1e-12);
  EXPECT_NEAR(r0.ks_max, 0.0, 1e-12);

  std::vector<double> shifted = pts;
  for (double& v : shifted) v += 1.5;
  const std::vector<EmpiricalMeasure> apart{EmpiricalMeasure(pts), EmpiricalMeasure(shifted)};
  const auto r1 = unfairness_of(apart, Weights::uniform(2));
  EXPECT_NEAR(r1.pairwise_max_w2, std::sqrt(0.5 * 1.5 * 1.5), 1e-12);
  EXPECT_NEAR(r1.upper_bound, std::sqrt(0.5 * 0.75 * 0.75), 1e-12);
  EXPECT_DOUBLE_EQ(r1.ks_max, 1.0);
  EXPECT_THROW(unfairness_of(apart, Weights::uniform(3)), DomainError);
}

TEST(FairnessBound, OracleMapsAlignTranslatedGroups) {
  const auto pts = grid_points(0.2, 1.2, 2000);
  std::vector<double> up = pts;
  for (double& v : up) v += 0.4;
  const std::vector<EmpiricalMeasure> ms{EmpiricalMeasure(pts), EmpiricalMeasure(up)};
  const Weights w = Weights::uniform(2);
  const std::vector<MonotoneMap> oracle{MonotoneMap::translation(kOmega, 0.2, kLip),
                                        MonotoneMap::translation(kOmega, -0.2, kLip)};
  const double slack = default_grid_slack(KnotGrid(kOmega, 10));
  EXPECT_DOUBLE_EQ(slack, 2.0 / 1024.0);

  const auto exact = check_fairness_bound(oracle, oracle, ms, w, slack);
  EXPECT_TRUE(exact.pass);
  EXPECT_NEAR(exact.lhs, 0.0, 1e-12);
  EXPECT_NEAR(exact.distance, 0.0, 1e-12);

  // Identity maps leave the groups 0.4 apart: lhs = sqrt(0.5) * 0.2, distance 0.2.
  const std::vector<MonotoneMap> id{MonotoneMap::identity(kOmega, kLip),
                                    MonotoneMap::identity(kOmega, kLip)};
  const auto loose = check_fairness_bound(id, oracle, ms, w, slack);
  EXPECT_NEAR(loose.lhs, std::sqrt(0.5) * 0.2, 1e-12);
  EXPECT_NEAR(loose.distance, 0.2, 1e-12);
  EXPECT_NEAR(loose.rhs, 0.2 + slack, 1e-12);
  EXPECT_TRUE(loose.pass);
}

TEST(Bernstein, ConstantsOfQuadraticPotential) {
  // Identity map with base point 0 has u(x) = x^2 / 2. Under U(0, 1):
  // Var = (1/5 - 1/9) / 4 = 1/45 and the largest deviation from 1/6 is 1/3.
  const std::vector<PotentialPair> pots{PotentialPair(MonotoneMap::identity(kOmega, kLip), 0.0),
                                        PotentialPair(MonotoneMap::identity(kOmega, kLip), 0.0)};
  QuadratureSpec spec;
  spec.quantiles = {[](double t) { return t; }, [](double t) { return t; }};
  spec.resolution = 8192;
  const auto c = bernstein_constants(pots, spec, Weights::uniform(2));
  EXPECT_NEAR(c.sigma2, 1.0 / 45.0, 1e-7);
  EXPECT_NEAR(c.b, 1.0 / 3.0, 1e-6);
}

TEST(Bernstein, TailFrequenciesStayBelowBound) {
  const std::vector<PotentialPair> pots{PotentialPair(MonotoneMap::identity(kOmega, kLip), 0.0),
                                        PotentialPair(MonotoneMap::translation(kOmega, 0.3, kLip), 0.0)};
  QuadratureSpec spec;
  spec.quantiles = {[](double t) { return t; }, [](double t) { return 0.5 + t; }};
  spec.resolution = 4096;
  const Weights w({0.4, 0.6});
  auto c = bernstein_constants(pots, spec, w);
  c.t_grid = {0.0, 0.01, 0.02, 0.04, 0.08};
  c.n_reps = 4000;
  const auto rows = bernstein_check(pots, spec, w, 400.0, c, 9);
  ASSERT_EQ(rows.size(), 5u);
  // t = 0 hits about half the replicates; the bound there is 1.
  EXPECT_NEAR(rows[0].empirical_freq, 0.5, 0.05);
  EXPECT_DOUBLE_EQ(rows[0].bound, 1.0);
  for (const auto& row : rows) {
    EXPECT_LE(row.empirical_freq, row.bound + 3.0 * row.std_error + 1e-12) << row.t;
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(rows[i].empirical_freq, rows[i - 1].empirical_freq);
  }
  const auto again = bernstein_check(pots, spec, w, 400.0, c, 9);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(again[i].empirical_freq, rows[i].empirical_freq);
  }
  c.sigma2 = 0.0;
  EXPECT_THROW(bernstein_check(pots, spec, w, 400.0, c, 9), ConfigError);
}

TEST(EvalSpec, Validation) {
  EvalSpec e;
  e.mode = EvalMode::kQuadrature;
  e.resolution = 16;
  EXPECT_THROW(e.validate(2), ConfigError);
  e.resolution = 1 << 14;
  e.fresh_sample_sizes = {10};
  EXPECT_THROW(e.validate(2), ConfigError);
  e.fresh_sample_sizes = {10, 20};
  EXPECT_NO_THROW(e.validate(2));
  EXPECT_EQ(e.fresh_size(1), 20u);
  EXPECT_EQ(EvalSpec{}.fresh_size(0), std::size_t{1} << 16);
}
