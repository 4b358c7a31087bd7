#include "fairbary/synth.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "fairbary/error.hpp"
#include "fairbary/fingerprint.hpp"

namespace fairbary {

namespace {

const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);

constexpr std::size_t kTruthIntervals = 1024;
constexpr std::size_t kMassQuadrature = 4096;

}  // namespace

double standard_normal(Rng& rng) { return boost::math::quantile(kStdNormal, uniform_open(rng)); }

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kTranslation:
      return "translation";
    case ScenarioKind::kGaussian:
      return "gaussian";
    case ScenarioKind::kNonlinear:
      return "nonlinear";
  }
  return "translation";
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
  if (name == "translation") return ScenarioKind::kTranslation;
  if (name == "gaussian") return ScenarioKind::kGaussian;
  if (name == "nonlinear" || name == "nonlinear-monotone") return ScenarioKind::kNonlinear;
  throw ConfigError(fmt::format("unknown scenario '{}'", name));
}

ScenarioSpec ScenarioSpec::defaults(ScenarioKind kind) {
  ScenarioSpec spec;
  spec.kind = kind;
  switch (kind) {
    case ScenarioKind::kTranslation:
      spec.shifts = {0.0, 0.4};
      break;
    case ScenarioKind::kGaussian:
      spec.gaussian = {{0.0, 1.0}, {1.0, 2.0}};
      spec.omega = DomainInterval(-4.0, 6.0);
      break;
    case ScenarioKind::kNonlinear:
      spec.links = {{0.3, 0.8, 0.4}, {0.4, 1.2, -0.3}};
      break;
  }
  return spec;
}

double ScenarioSpec::f_star(std::size_t s, double x) const {
  switch (kind) {
    case ScenarioKind::kTranslation:
      return x + shifts[s];
    case ScenarioKind::kGaussian:
      return gaussian[s].second * x + gaussian[s].first;
    case ScenarioKind::kNonlinear: {
      const auto& c = links[s];
      return c[0] + x * (c[1] + x * c[2]);
    }
  }
  return x;
}

double ScenarioSpec::feature_quantile(double t) const {
  switch (kind) {
    case ScenarioKind::kTranslation:
      return x_lo + t * (x_hi - x_lo);
    case ScenarioKind::kGaussian: {
      const double lo = boost::math::cdf(kStdNormal, -x_trunc);
      const double hi = boost::math::cdf(kStdNormal, x_trunc);
      const double p = std::clamp(lo + t * (hi - lo), lo, hi);
      return std::clamp(boost::math::quantile(kStdNormal, p), -x_trunc, x_trunc);
    }
    case ScenarioKind::kNonlinear:
      return t;
  }
  return t;
}

double ScenarioSpec::prediction_quantile(std::size_t s, double t) const {
  return f_star(s, feature_quantile(t));
}

double ScenarioSpec::mass_outside(std::size_t s) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < kMassQuadrature; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(kMassQuadrature);
    const double f = prediction_quantile(s, t);
    if (noise_sd == 0.0) {
      acc += omega.contains(f) ? 0.0 : 1.0;
    } else {
      acc += boost::math::cdf(kStdNormal, (omega.lo - f) / noise_sd) +
             boost::math::cdf(boost::math::complement(kStdNormal, (omega.hi - f) / noise_sd));
    }
  }
  return acc / static_cast<double>(kMassQuadrature);
}

void ScenarioSpec::validate() const {
  const std::size_t m = groups();
  auto need = [&](std::size_t got, const char* what) {
    if (got != m) {
      throw ConfigError(fmt::format("{} scenario needs {} {} entries, got {}", to_string(kind), m,
                                    what, got));
    }
  };
  switch (kind) {
    case ScenarioKind::kTranslation:
      need(shifts.size(), "shift");
      if (!(x_lo < x_hi)) throw ConfigError("translation feature range needs x_lo < x_hi");
      break;
    case ScenarioKind::kGaussian:
      need(gaussian.size(), "(mean, sd)");
      for (const auto& [mean, sd] : gaussian) {
        if (!(sd > 0.0)) throw ConfigError(fmt::format("gaussian sd must be positive, got {}", sd));
        (void)mean;
      }
      if (!(x_trunc > 0.0)) throw ConfigError("gaussian truncation must be positive");
      break;
    case ScenarioKind::kNonlinear:
      need(links.size(), "link");
      for (const auto& c : links) {
        // Increasing on [0, 1] iff the derivative is positive at both ends.
        if (!(c[1] > 0.0) || !(c[1] + 2.0 * c[2] > 0.0)) {
          throw ConfigError(fmt::format("link ({}, {}, {}) is not increasing on [0, 1]", c[0], c[1],
                                        c[2]));
        }
      }
      break;
  }
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
    throw ConfigError(fmt::format("noise_sd must be >= 0, got {}", noise_sd));
  }
  for (std::size_t s = 0; s < m; ++s) {
    const double out = mass_outside(s);
    if (out > 0.01) {
      throw ConfigError(fmt::format(
          "group {} puts {:.3f}% of its outcome mass outside [{}, {}]; truncation would distort "
          "the ground truth",
          s, 100.0 * out, omega.lo, omega.hi));
    }
  }
}

double GroundTruth::congruency_residual(const Weights& w, std::size_t points) const {
  std::vector<MonotoneMap> inverses;
  for (const auto& m : theta_star) inverses.push_back(m.inverse());
  const double lo = inverses[0].knots().front();
  const double hi = inverses[0].knots().back();
  const double lo_z = lo - (hi - lo), hi_z = hi + (hi - lo);
  double worst = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double z = lo_z + (hi_z - lo_z) * static_cast<double>(i) / static_cast<double>(points - 1);
    double acc = 0.0;
    for (std::size_t s = 0; s < inverses.size(); ++s) acc += w[s] * inverses[s].eval(z);
    worst = std::max(worst, std::abs(acc - z));
  }
  return worst;
}

namespace {

// sup over a small test-function family of Var g(Z) / E g'(Z)^2.
double poincare_estimate(const ScenarioSpec& spec, std::size_t s) {
  const std::size_t n = 4096;
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = spec.prediction_quantile(s, (static_cast<double>(i) + 0.5) / static_cast<double>(n));
  }
  const double a = z.front(), b = z.back();
  const double width = b - a > 0.0 ? b - a : 1.0;
  double best = 0.0;
  for (int k = 0; k <= 16; ++k) {
    double mean = 0.0, sq = 0.0, grad = 0.0;
    for (double v : z) {
      const double u = (v - a) / width;
      const double g = k == 0 ? v : std::cos(k * M_PI * u);
      mean += g;
    }
    mean /= static_cast<double>(n);
    for (double v : z) {
      const double u = (v - a) / width;
      const double g = k == 0 ? v : std::cos(k * M_PI * u);
      const double dg = k == 0 ? 1.0 : -k * M_PI / width * std::sin(k * M_PI * u);
      sq += (g - mean) * (g - mean);
      grad += dg * dg;
    }
    if (grad > 0.0) best = std::max(best, sq / grad);
  }
  return best;
}

}  // namespace

GroundTruth make_truth(const ScenarioSpec& spec) {
  spec.validate();
  const std::size_t m = spec.groups();
  GroundTruth truth;
  std::vector<std::vector<double>> q(m, std::vector<double>(kTruthIntervals + 1));
  std::vector<double> bary(kTruthIntervals + 1, 0.0);
  for (std::size_t k = 0; k <= kTruthIntervals; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(kTruthIntervals);
    for (std::size_t s = 0; s < m; ++s) {
      q[s][k] = spec.prediction_quantile(s, t);
      bary[k] += spec.w[s] * q[s][k];
    }
  }
  for (std::size_t s = 0; s < m; ++s) {
    try {
      truth.theta_star.emplace_back(q[s], bary, spec.lip);
    } catch (const DomainError& e) {
      throw ConfigError(fmt::format("ground-truth map of group {} is not in the slope box of L = {}: {}",
                                    s, spec.lip.L, e.what()));
    }
    truth.prediction_laws.quantiles.push_back(
        [spec, s](double t) { return spec.prediction_quantile(s, t); });
    truth.poincare_constant = std::max(truth.poincare_constant, poincare_estimate(spec, s));
  }
  return truth;
}

double fair_bayes(const ScenarioSpec& spec, const GroundTruth& truth, std::size_t s, double x) {
  return truth.theta_star.at(s).eval(spec.f_star(s, x));
}

FeatureMatrix sample_features(const ScenarioSpec& spec, std::size_t n, Rng& rng) {
  std::vector<double> xs(n);
  for (auto& x : xs) x = spec.feature_quantile(uniform_open(rng));
  return FeatureMatrix::column(std::move(xs));
}

Generated generate(const ScenarioSpec& spec, std::span<const std::size_t> n_per_group) {
  Generated out;
  out.truth = make_truth(spec);
  if (n_per_group.size() != spec.groups()) {
    throw ConfigError(fmt::format("{} group sizes for {} groups", n_per_group.size(), spec.groups()));
  }
  for (std::size_t s = 0; s < spec.groups(); ++s) {
    if (n_per_group[s] < 1) throw ConfigError("group sizes must be positive");
    Rng rng(derive_seed(spec.seed, s));
    GroupSample g;
    g.group = s;
    g.xs = sample_features(spec, n_per_group[s], rng);
    g.ys.resize(n_per_group[s]);
    for (std::size_t i = 0; i < n_per_group[s]; ++i) {
      const double f = spec.f_star(s, g.xs.row(i)[0]);
      double y = f;
      if (spec.noise_sd > 0.0) {
        std::size_t tries = 0;
        do {
          y = f + spec.noise_sd * standard_normal(rng);
          if (++tries > 1000000) throw ConfigError("noise truncation did not terminate");
        } while (!spec.omega.contains(y));
      }
      g.ys[i] = y;
    }
    out.samples.push_back(std::move(g));
  }
  return out;
}

std::vector<FeatureMatrix> evaluation_features(const ScenarioSpec& spec, const EvalSpec& eval) {
  eval.validate(spec.groups());
  std::vector<FeatureMatrix> out;
  for (std::size_t s = 0; s < spec.groups(); ++s) {
    if (eval.mode == EvalMode::kQuadrature) {
      std::vector<double> xs(eval.resolution);
      for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = spec.feature_quantile((static_cast<double>(i) + 0.5) /
                                      static_cast<double>(eval.resolution));
      }
      out.push_back(FeatureMatrix::column(std::move(xs)));
    } else {
      Rng rng(derive_seed(eval.seed, 0x5EED0000ULL + s));
      out.push_back(sample_features(spec, eval.fresh_size(s), rng));
    }
  }
  return out;
}

double truth_error(const FairRegressor& candidate, const GroundTruth& truth,
                   const ScenarioSpec& spec, const EvalSpec& eval) {
  if (candidate.groups() != spec.groups()) {
    throw SchemaError(fmt::format("candidate has {} groups, scenario has {}", candidate.groups(),
                                  spec.groups()));
  }
  const auto features = evaluation_features(spec, eval);
  double total = 0.0;
  for (std::size_t s = 0; s < spec.groups(); ++s) {
    const auto pred = candidate.predict_batch(s, features[s]);
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double d = pred[i] - fair_bayes(spec, truth, s, features[s].row(i)[0]);
      acc += d * d;
    }
    total += spec.w[s] * acc / static_cast<double>(pred.size());
  }
  return total;
}

}  // namespace fairbary
