#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fairbary/error.hpp"
#include "fairbary/maps.hpp"
#include "fairbary/potentials.hpp"

using namespace fairbary;

namespace {

MonotoneMap sample_map() {
  return MonotoneMap({0.0, 0.4, 1.0, 1.5, 2.0}, {0.3, 0.5, 1.3, 1.8, 2.1}, LipschitzBound(2.0));
}

// u(x) = sup_z x z - u_dagger(z) by brute force over a fine grid.
double brute_conjugate(const PotentialPair& p, double x) {
  double best = -INFINITY;
  for (double z = -4.0; z <= 6.0; z += 1e-4) best = std::max(best, x * z - p.u_dagger(z));
  return best;
}

// int_a^b f by composite Simpson with n (even) panels.
template <typename F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

}  // namespace

TEST(PotentialPair, UDaggerIntegratesInverse) {
  const auto map = sample_map();
  const auto inv = map.inverse();
  const PotentialPair p(map, 0.0);
  for (double z : {-1.0, 0.0, 0.31, 0.9, 1.7, 2.05, 3.5}) {
    // Simpson is exact for the piecewise-linear integrand when the panels split
    // at the knots; a dense grid is accurate enough for the comparison.
    const double expect = simpson([&](double t) { return inv(t); }, 0.0, z, 20000);
    EXPECT_NEAR(p.u_dagger(z), expect, 1e-7) << z;
  }
  EXPECT_DOUBLE_EQ(p.u_dagger(0.0), 0.0);
}

TEST(PotentialPair, ConjugateMatchesBruteForceSupremum) {
  const PotentialPair p(sample_map(), 0.0);
  for (double x : {-0.7, 0.0, 0.25, 0.8, 1.2, 1.9, 2.6}) {
    EXPECT_NEAR(p.u(x), brute_conjugate(p, x), 1e-6) << x;
  }
}

TEST(PotentialPair, YoungFenchelEqualityAtImage) {
  const auto map = sample_map();
  const PotentialPair p(map, 0.0);
  for (double x = -1.0; x <= 3.0; x += 0.05) {
    const double y = map(x);
    EXPECT_NEAR(p.theta(x), y, 1e-13);
    EXPECT_NEAR(p.u(x) + p.u_dagger(y), x * y, 1e-12) << x;
  }
}

TEST(PotentialPair, DifferencesIntegrateTheMap) {
  const auto map = sample_map();
  const PotentialPair p(map, 0.0);
  for (auto [a, b] : {std::pair{-0.5, 0.3}, std::pair{0.2, 1.7}, std::pair{1.1, 2.9}}) {
    const double expect = simpson([&](double t) { return map(t); }, a, b, 20000);
    EXPECT_NEAR(p.u(b) - p.u(a), expect, 1e-7);
  }
}

TEST(PotentialPair, FromInverseAgreesWithForwardConstruction) {
  const auto map = sample_map();
  const auto inv = map.inverse();
  const PotentialPair a(map, 0.5);
  const auto b = PotentialPair::from_inverse(inv.knots(), inv.values(), 0.5);
  for (double x = -1.0; x <= 3.0; x += 0.1) {
    EXPECT_NEAR(a.u(x), b.u(x), 1e-14);
    EXPECT_NEAR(b.theta_inverse(map(x)), x, 1e-13);
  }
  EXPECT_THROW(PotentialPair::from_inverse(std::vector<double>{0.0}, std::vector<double>{0.0}, 0.0),
               DomainError);
}

TEST(MultipleCorrelation, AveragesPotentials) {
  const auto m0 = sample_map();
  const auto m1 = MonotoneMap::translation(DomainInterval(0.0, 2.0), -0.1, LipschitzBound(2.0));
  const std::vector<MonotoneMap> maps{m0, m1};
  const std::vector<EmpiricalMeasure> ms{EmpiricalMeasure({0.1, 0.5, 1.9}),
                                         EmpiricalMeasure({0.2, 1.0})};
  const Weights w({0.4, 0.6});
  const auto c = multiple_correlation(maps, ms, w, 0.0);
  const PotentialPair p0(m0, 0.0), p1(m1, 0.0);
  const double g0 = (p0.u(0.1) + p0.u(0.5) + p0.u(1.9)) / 3.0;
  const double g1 = (p1.u(0.2) + p1.u(1.0)) / 2.0;
  EXPECT_NEAR(c.per_group[0], g0, 1e-15);
  EXPECT_NEAR(c.per_group[1], g1, 1e-15);
  EXPECT_NEAR(c.value, 0.4 * g0 + 0.6 * g1, 1e-15);
  // Translation potential in closed form: u(x) = (x - 0.1)^2 / 2 with base point 0.
  EXPECT_NEAR(p1.u(1.0), 0.405, 1e-14);
}

TEST(QuadratureSpec, ValidatesResolutionAndIntegrates) {
  QuadratureSpec spec;
  spec.quantiles = {[](double t) { return t; }, [](double t) { return 2.0 * t; }};
  spec.resolution = 512;
  EXPECT_THROW(spec.validate(2), ConfigError);
  spec.resolution = 4096;
  EXPECT_NO_THROW(spec.validate(2));
  EXPECT_THROW(spec.validate(3), DomainError);
  // E[Z^2] for Z ~ U(0, 2) is 4/3; midpoint error is O(1/n^2).
  EXPECT_NEAR(spec.expectation(1, [](double z) { return z * z; }), 4.0 / 3.0, 1e-6);
}

TEST(MapDistance, TranslationsDifferByConstant) {
  QuadratureSpec spec;
  spec.quantiles = {[](double t) { return t; }, [](double t) { return 1.0 + t; }};
  spec.resolution = 1024;
  const DomainInterval omega(0.0, 2.0);
  const LipschitzBound lip(2.0);
  const std::vector<MonotoneMap> a{MonotoneMap::translation(omega, 0.1, lip),
                                   MonotoneMap::translation(omega, -0.3, lip)};
  const std::vector<MonotoneMap> b{MonotoneMap::translation(omega, 0.3, lip),
                                   MonotoneMap::translation(omega, 0.1, lip)};
  const Weights w({0.25, 0.75});
  EXPECT_NEAR(map_distance_sq(a, b, w, spec), 0.25 * 0.04 + 0.75 * 0.16, 1e-14);
}

TEST(CorrelationGap, SandwichForCongruentPair) {
  // theta = z + c_s with sum w_s c_s = 0 against the identity oracle: the gap
  // equals sum w_s (c_s E z + c_s^2 / 2) and sum w_s c_s E z vanishes when the
  // measures share their mean.
  QuadratureSpec spec;
  spec.quantiles = {[](double t) { return 0.5 + t; }, [](double t) { return 0.5 + t; }};
  spec.resolution = 2048;
  const DomainInterval omega(0.0, 2.0);
  const LipschitzBound lip(2.0);
  const std::vector<MonotoneMap> fam{MonotoneMap::translation(omega, 0.2, lip),
                                     MonotoneMap::translation(omega, -0.2, lip)};
  const std::vector<MonotoneMap> id{MonotoneMap::identity(omega, lip),
                                    MonotoneMap::identity(omega, lip)};
  const Weights w = Weights::uniform(2);
  const double gap = correlation_gap(fam, id, w, spec, 0.0);
  EXPECT_NEAR(gap, 0.5 * 0.04, 1e-12);
  const double d2 = map_distance_sq(fam, id, w, spec);
  EXPECT_LE(d2 / (2.0 * lip.L), gap + 1e-12);
  EXPECT_LE(gap, lip.L / 2.0 * d2 + 1e-12);
}
