#include "fairbary/metrics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fairbary/error.hpp"
#include "fairbary/estimator.hpp"
#include "fairbary/fingerprint.hpp"
#include "fairbary/log.hpp"
#include "fairbary/random.hpp"

namespace fairbary {

void EvalSpec::validate(std::size_t groups) const {
  if (mode == EvalMode::kQuadrature && resolution < kMinQuadratureResolution) {
    throw ConfigError(fmt::format("quadrature resolution {} below the minimum {}", resolution,
                                  kMinQuadratureResolution));
  }
  if (!fresh_sample_sizes.empty() && fresh_sample_sizes.size() != groups) {
    throw ConfigError(fmt::format("{} fresh sample sizes for {} groups", fresh_sample_sizes.size(),
                                  groups));
  }
  for (auto n : fresh_sample_sizes) {
    if (n < 1) throw ConfigError("fresh sample sizes must be positive");
  }
}

std::size_t EvalSpec::fresh_size(std::size_t s) const {
  return fresh_sample_sizes.empty() ? std::size_t{1} << 16 : fresh_sample_sizes.at(s);
}

namespace {

void check_sizes(std::size_t f, std::size_t g, std::size_t m, std::size_t w) {
  if (f != g || f != m || m != w) {
    throw DomainError(fmt::format("distance needs matching group counts, got {}, {}, {}, {}", f, g,
                                  m, w));
  }
}

}  // namespace

double weighted_sq_distance(std::span<const FeatureFn> f, std::span<const FeatureFn> g,
                            std::span<const FeatureMatrix> xs, const Weights& w) {
  check_sizes(f.size(), g.size(), xs.size(), w.size());
  double total = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) {
    if (xs[s].rows() == 0) throw DomainError(fmt::format("group {} has no evaluation points", s));
    double acc = 0.0;
    for (std::size_t i = 0; i < xs[s].rows(); ++i) {
      const double d = f[s](xs[s].row(i)) - g[s](xs[s].row(i));
      acc += d * d;
    }
    total += w[s] * acc / static_cast<double>(xs[s].rows());
  }
  return total;
}

double weighted_sq_distance(std::span<const ScalarFn> f, std::span<const ScalarFn> g,
                            std::span<const EmpiricalMeasure> ms, const Weights& w) {
  check_sizes(f.size(), g.size(), ms.size(), w.size());
  double total = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) {
    if (ms[s].size() == 0) throw DomainError(fmt::format("group {} measure is empty", s));
    double acc = 0.0;
    for (double z : ms[s].points()) {
      const double d = f[s](z) - g[s](z);
      acc += d * d;
    }
    total += w[s] * acc / static_cast<double>(ms[s].size());
  }
  return total;
}

double weighted_sq_distance(std::span<const ScalarFn> f, std::span<const ScalarFn> g,
                            const QuadratureSpec& spec, const Weights& w) {
  check_sizes(f.size(), g.size(), spec.quantiles.size(), w.size());
  spec.validate(w.size());
  double total = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) {
    total += w[s] * spec.expectation(s, [&](double z) {
      const double d = f[s](z) - g[s](z);
      return d * d;
    });
  }
  return total;
}

UnfairnessReport unfairness_of(std::span<const EmpiricalMeasure> pushforwards, const Weights& w) {
  if (pushforwards.size() != w.size()) throw DomainError("pushforwards and weights differ in size");
  UnfairnessReport out;
  out.upper_bound = minimax_center_upper_bound(pushforwards, w);
  for (std::size_t s = 0; s < pushforwards.size(); ++s) {
    for (std::size_t t = s + 1; t < pushforwards.size(); ++t) {
      out.pairwise_max_w2 = std::max(
          out.pairwise_max_w2, w2_distance(pushforwards[s], pushforwards[t], W2Convention::kHalf));
      out.ks_max = std::max(out.ks_max, ks_statistic(pushforwards[s], pushforwards[t]));
    }
  }
  return out;
}

UnfairnessReport unfairness(const FairRegressor& fair, std::span<const FeatureMatrix> features,
                            const Weights& w) {
  if (features.size() != fair.groups()) {
    throw DomainError(fmt::format("{} feature samples for {} groups", features.size(), fair.groups()));
  }
  std::vector<EmpiricalMeasure> pushed;
  for (std::size_t s = 0; s < features.size(); ++s) {
    if (features[s].rows() == 0) throw DomainError(fmt::format("group {} has no features", s));
    pushed.emplace_back(fair.predict_batch(s, features[s]));
  }
  return unfairness_of(pushed, w);
}

double default_grid_slack(const KnotGrid& oracle_grid) {
  return oracle_grid.domain().width() / static_cast<double>(oracle_grid.intervals());
}

FairnessCheck check_fairness_bound(std::span<const MonotoneMap> fitted,
                                   std::span<const MonotoneMap> oracle,
                                   std::span<const EmpiricalMeasure> ms, const Weights& w,
                                   double slack) {
  if (fitted.size() != w.size() || oracle.size() != w.size() || ms.size() != w.size()) {
    throw DomainError("fairness check needs matching group counts");
  }
  std::vector<EmpiricalMeasure> pushed;
  for (std::size_t s = 0; s < ms.size(); ++s) {
    std::vector<double> ys;
    ys.reserve(ms[s].size());
    for (double z : ms[s].points()) ys.push_back(fitted[s].eval(z));
    pushed.emplace_back(std::move(ys));
  }
  FairnessCheck out;
  out.slack = slack;
  out.lhs = minimax_center_upper_bound(pushed, w);
  out.distance = std::sqrt(map_error(fitted, oracle, ms, w));
  const double factor = std::sqrt(1.0 / (static_cast<double>(w.size()) * w.min()));
  out.rhs = factor * out.distance + slack;
  out.pass = out.lhs <= out.rhs;
  return out;
}

FairnessCheck check_fairness_bound(const FairRegressor& fair, std::span<const MonotoneMap> oracle,
                                   std::span<const EmpiricalMeasure> ms, const Weights& w,
                                   double slack) {
  return check_fairness_bound(fair.maps().maps(), oracle, ms, w, slack);
}

void BernsteinCase::validate() const {
  if (!(sigma2 > 0.0) || !(b > 0.0)) {
    throw ConfigError(fmt::format("Bernstein case needs sigma2 > 0 and b > 0, got ({}, {})", sigma2, b));
  }
  if (n_reps < 1) throw ConfigError("Bernstein case needs at least one replicate");
  for (double t : t_grid) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("Bernstein thresholds must be >= 0");
  }
}

BernsteinCase bernstein_constants(std::span<const PotentialPair> potentials,
                                  const QuadratureSpec& spec, const Weights& w) {
  spec.validate(w.size());
  if (potentials.size() != w.size()) throw DomainError("one potential per group expected");
  BernsteinCase out;
  out.sigma2 = 0.0;
  out.b = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) {
    const auto& u = potentials[s];
    const double mean = spec.expectation(s, [&](double z) { return u.u(z); });
    const double var = spec.expectation(s, [&](double z) {
      const double c = u.u(z) - mean;
      return c * c;
    });
    out.sigma2 += w[s] * var;
    // Range over the support: dense scan including the extreme quantiles.
    const std::size_t scan = spec.resolution;
    for (std::size_t i = 0; i <= scan; ++i) {
      const double t = std::clamp(static_cast<double>(i) / static_cast<double>(scan), 1e-12,
                                  1.0 - 1e-12);
      out.b = std::max(out.b, std::abs(u.u(spec.quantiles[s](t)) - mean));
    }
  }
  return out;
}

std::vector<BernsteinRow> bernstein_check(std::span<const PotentialPair> potentials,
                                          const QuadratureSpec& spec, const Weights& w,
                                          double n_tilde, const BernsteinCase& bcase,
                                          std::uint64_t seed) {
  bcase.validate();
  spec.validate(w.size());
  if (potentials.size() != w.size()) throw DomainError("one potential per group expected");
  if (!(n_tilde >= 1.0)) throw ConfigError("Bernstein check needs n_tilde >= 1");
  const std::size_t m = w.size();

  std::vector<double> means(m);
  std::vector<std::size_t> sizes(m);
  for (std::size_t s = 0; s < m; ++s) {
    means[s] = spec.expectation(s, [&](double z) { return potentials[s].u(z); });
    sizes[s] = static_cast<std::size_t>(std::ceil(n_tilde * w[s] - 1e-9));
  }

  const auto reps = static_cast<std::ptrdiff_t>(bcase.n_reps);
  std::vector<double> stats(bcase.n_reps);
  std::vector<double> spread(bcase.n_reps);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < reps; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    double stat = 0.0, worst = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
      double acc = 0.0;
      for (std::size_t i = 0; i < sizes[s]; ++i) {
        const double v = potentials[s].u(spec.quantiles[s](uniform_open(rng)));
        worst = std::max(worst, std::abs(v - means[s]));
        acc += v;
      }
      stat += w[s] * (acc / static_cast<double>(sizes[s]) - means[s]);
    }
    stats[static_cast<std::size_t>(r)] = stat;
    spread[static_cast<std::size_t>(r)] = worst;
  }

  const double observed_range = *std::max_element(spread.begin(), spread.end());
  if (observed_range > bcase.b * (1.0 + 1e-9)) {
    log::warn("Bernstein range constant b = {} below the observed deviation {}", bcase.b,
              observed_range);
  }
  double mean_stat = 0.0, var_stat = 0.0;
  for (double v : stats) mean_stat += v;
  mean_stat /= static_cast<double>(stats.size());
  for (double v : stats) var_stat += (v - mean_stat) * (v - mean_stat);
  var_stat /= static_cast<double>(std::max<std::size_t>(stats.size() - 1, 1));
  if (var_stat * n_tilde > 1.5 * bcase.sigma2 && stats.size() > 100) {
    log::warn("Bernstein variance constant {} below the measured {}", bcase.sigma2,
              var_stat * n_tilde);
  }

  std::vector<BernsteinRow> rows;
  const double reps_d = static_cast<double>(bcase.n_reps);
  for (double t : bcase.t_grid) {
    BernsteinRow row;
    row.t = t;
    std::size_t hits = 0;
    for (double v : stats) hits += v > t ? 1 : 0;
    row.empirical_freq = static_cast<double>(hits) / reps_d;
    row.bound = std::exp(-0.5 * n_tilde * t * t / (bcase.sigma2 + t * bcase.b));
    const double p = std::min(row.bound, 1.0);
    row.std_error = std::sqrt(p * (1.0 - p) / reps_d);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fairbary
