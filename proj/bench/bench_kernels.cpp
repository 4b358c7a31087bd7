// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <vector>

#include "fairbary/kernels.hpp"
#include "fairbary/maps.hpp"
#include "fairbary/random.hpp"
#include "fairbary/regression.hpp"

using namespace fairbary;

namespace {

struct PotentialCase {
  PotentialPair pot;
  std::vector<double> points;
};

PotentialCase make_case(std::size_t n) {
  Rng rng(1);
  const KnotGrid grid(DomainInterval(0.0, 2.0), 6);
  std::vector<double> knots(grid.knots().begin(), grid.knots().end());
  std::vector<double> inverse;
  double v = -0.1;
  for (std::size_t k = 0; k < knots.size(); ++k) {
    if (k > 0) v += (0.6 + 0.9 * uniform_open(rng)) * grid.spacing();
    inverse.push_back(v);
  }
  PotentialCase c{PotentialPair::from_inverse(knots, inverse, 0.0), {}};
  c.points.resize(n);
  for (auto& p : c.points) p = 2.0 * uniform_open(rng);
  return c;
}

void BM_PotentialSumsReference(benchmark::State& state) {
  const auto c = make_case(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(potential_sums_reference(c.pot, c.points));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PotentialSumsSerial(benchmark::State& state) {
  const auto c = make_case(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(potential_sums(c.pot, c.points, Exec::kSerial));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PotentialSumsParallel(benchmark::State& state) {
  const auto c = make_case(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(potential_sums(c.pot, c.points, Exec::kParallel));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MeanPotentialSerial(benchmark::State& state) {
  const auto c = make_case(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mean_potential(c.pot, c.points, Exec::kSerial));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MeanPotentialParallel(benchmark::State& state) {
  const auto c = make_case(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mean_potential(c.pot, c.points, Exec::kParallel));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct KnnCase {
  BaseRegressor reg;
  FeatureMatrix queries;
};

KnnCase make_knn(std::size_t n, std::size_t dim) {
  Rng rng(2);
  std::vector<double> xs(n * dim), ys(n), qs(n * dim);
  for (auto& x : xs) x = uniform_open(rng);
  for (auto& q : qs) q = uniform_open(rng);
  for (std::size_t i = 0; i < n; ++i) ys[i] = 0.5 + 0.5 * xs[i * dim];
  const GroupSample g{0, FeatureMatrix(n, dim, std::move(xs)), std::move(ys)};
  return {BaseRegressor::fit(g, DomainInterval(0.0, 2.0)), FeatureMatrix(n, dim, std::move(qs))};
}

void BM_KnnSerial(benchmark::State& state) {
  const auto c = make_knn(static_cast<std::size_t>(state.range(0)),
                          static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(c.reg.predict_batch(c.queries, Exec::kSerial));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_KnnParallel(benchmark::State& state) {
  const auto c = make_knn(static_cast<std::size_t>(state.range(0)),
                          static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(c.reg.predict_batch(c.queries, Exec::kParallel));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_PotentialSumsReference)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_PotentialSumsSerial)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_PotentialSumsParallel)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_MeanPotentialSerial)->Arg(1 << 16);
BENCHMARK(BM_MeanPotentialParallel)->Arg(1 << 16);
BENCHMARK(BM_KnnSerial)->Args({4096, 1})->Args({2048, 3});
BENCHMARK(BM_KnnParallel)->Args({4096, 1})->Args({2048, 3});

BENCHMARK_MAIN();
