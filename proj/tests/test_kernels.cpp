#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include <omp.h>

#include "fairbary/kernels.hpp"
#include "fairbary/maps.hpp"
#include "fairbary/random.hpp"

using namespace fairbary;

namespace {

struct Fixture {
  std::vector<double> knots;
  std::vector<double> inverse;
  std::vector<double> points;
};

Fixture make_fixture(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Fixture f;
  const KnotGrid grid(DomainInterval(0.0, 2.0), 4);
  f.knots.assign(grid.knots().begin(), grid.knots().end());
  double v = -0.15;
  for (std::size_t k = 0; k < f.knots.size(); ++k) {
    if (k > 0) v += (0.6 + 0.9 * uniform_open(rng)) * grid.spacing();
    f.inverse.push_back(v);
  }
  // Points spill past both ends so both extensions are exercised.
  for (std::size_t i = 0; i < n; ++i) f.points.push_back(-0.5 + 3.2 * uniform_open(rng));
  return f;
}

}  // namespace

TEST(PotentialSums, ParallelMatchesReference) {
  const auto f = make_fixture(10000, 1);
  const auto pot = PotentialPair::from_inverse(f.knots, f.inverse, 0.0);
  const auto ref = potential_sums_reference(pot, f.points);
  const auto par = potential_sums(pot, f.points, Exec::kParallel);
  const auto ser = potential_sums(pot, f.points, Exec::kSerial);
  EXPECT_NEAR(par.mean_u, ref.mean_u, 1e-12);
  EXPECT_NEAR(ser.mean_u, ref.mean_u, 1e-12);
  ASSERT_EQ(par.grad.size(), ref.grad.size());
  for (std::size_t k = 0; k < ref.grad.size(); ++k) {
    EXPECT_NEAR(par.grad[k], ref.grad[k], 1e-12) << k;
    EXPECT_NEAR(ser.grad[k], ref.grad[k], 1e-12) << k;
  }
}

TEST(PotentialSums, MeanMatchesDirectConjugate) {
  const auto f = make_fixture(3000, 2);
  const auto pot = PotentialPair::from_inverse(f.knots, f.inverse, 0.0);
  double direct = 0.0;
  for (double x : f.points) direct += pot.u(x);
  direct /= static_cast<double>(f.points.size());
  EXPECT_NEAR(mean_potential(pot, f.points, Exec::kSerial), direct, 1e-12);
  EXPECT_NEAR(mean_potential(pot, f.points, Exec::kParallel), direct, 1e-12);
}

TEST(PotentialSums, GradientMatchesFiniteDifferences) {
  const auto f = make_fixture(5000, 3);
  const auto pot = PotentialPair::from_inverse(f.knots, f.inverse, 0.0);
  const auto sums = potential_sums(pot, f.points);
  const double h = 1e-6;
  for (std::size_t k = 0; k < f.knots.size(); ++k) {
    auto up = f.inverse, down = f.inverse;
    up[k] += h;
    down[k] -= h;
    const double fu =
        mean_potential(PotentialPair::from_inverse(f.knots, up, 0.0), f.points, Exec::kSerial);
    const double fd =
        mean_potential(PotentialPair::from_inverse(f.knots, down, 0.0), f.points, Exec::kSerial);
    EXPECT_NEAR(sums.grad[k], (fu - fd) / (2.0 * h), 1e-6) << k;
  }
}

TEST(PotentialSums, ParallelResultIndependentOfThreadCount) {
  const auto f = make_fixture(50000, 4);
  const auto pot = PotentialPair::from_inverse(f.knots, f.inverse, 0.0);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto one = potential_sums(pot, f.points);
  omp_set_num_threads(4);
  const auto four = potential_sums(pot, f.points);
  omp_set_num_threads(saved);
  EXPECT_EQ(one.mean_u, four.mean_u);
  EXPECT_EQ(one.grad, four.grad);
}

TEST(PotentialSums, BasePointShiftsOnlyTheConstant) {
  const auto f = make_fixture(1000, 5);
  const auto a = potential_sums(PotentialPair::from_inverse(f.knots, f.inverse, 0.0), f.points);
  const auto b = potential_sums(PotentialPair::from_inverse(f.knots, f.inverse, 0.7), f.points);
  // u_dagger shifts by int_0^0.7 theta^{-1}, so u shifts by the same amount.
  const auto pot = PotentialPair::from_inverse(f.knots, f.inverse, 0.0);
  EXPECT_NEAR(b.mean_u - a.mean_u, pot.u_dagger(0.7), 1e-12);
}
