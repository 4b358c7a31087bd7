#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fairbary/error.hpp"
#include "fairbary/synth.hpp"

using namespace fairbary;

TEST(Scenario, GenerationIsDeterministicPerSeed) {
  auto spec = ScenarioSpec::defaults(ScenarioKind::kTranslation);
  spec.seed = 17;
  const std::vector<std::size_t> n{300, 200};
  const auto a = generate(spec, n);
  const auto b = generate(spec, n);
  ASSERT_EQ(a.samples.size(), 2u);
  EXPECT_EQ(a.samples[1].size(), 200u);
  for (std::size_t s = 0; s < 2; ++s) {
    EXPECT_EQ(a.samples[s].ys, b.samples[s].ys);
    EXPECT_TRUE(std::equal(a.samples[s].xs.data().begin(), a.samples[s].xs.data().end(),
                           b.samples[s].xs.data().begin()));
  }
  spec.seed = 18;
  EXPECT_NE(generate(spec, n).samples[0].ys, a.samples[0].ys);
}

TEST(Scenario, OutcomesStayInDomainAndFeaturesInRange) {
  for (auto kind : {ScenarioKind::kTranslation, ScenarioKind::kGaussian, ScenarioKind::kNonlinear}) {
    auto spec = ScenarioSpec::defaults(kind);
    spec.seed = 3;
    const std::vector<std::size_t> n{2000, 2000};
    const auto gen = generate(spec, n);
    for (const auto& g : gen.samples) {
      for (double y : g.ys) EXPECT_TRUE(spec.omega.contains(y)) << to_string(kind);
      for (double x : g.xs.data()) {
        if (kind == ScenarioKind::kTranslation) {
          EXPECT_GE(x, spec.x_lo);
          EXPECT_LE(x, spec.x_hi);
        } else if (kind == ScenarioKind::kGaussian) {
          EXPECT_LE(std::abs(x), spec.x_trunc);
        }
      }
    }
  }
}

TEST(Scenario, NoiseIsCenteredOnRegressionFunction) {
  auto spec = ScenarioSpec::defaults(ScenarioKind::kTranslation);
  spec.seed = 4;
  const std::vector<std::size_t> n{20000, 20000};
  const auto gen = generate(spec, n);
  for (std::size_t s = 0; s < 2; ++s) {
    double acc = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < gen.samples[s].size(); ++i) {
      const double r = gen.samples[s].ys[i] - spec.f_star(s, gen.samples[s].xs.row(i)[0]);
      acc += r;
      sq += r * r;
    }
    const double nd = static_cast<double>(gen.samples[s].size());
    EXPECT_NEAR(acc / nd, 0.0, 0.005);
    EXPECT_NEAR(std::sqrt(sq / nd), spec.noise_sd, 0.005);
  }
}

TEST(GroundTruth, TranslationMapsMoveToTheMidpoint) {
  const auto spec = ScenarioSpec::defaults(ScenarioKind::kTranslation);
  const auto truth = make_truth(spec);
  EXPECT_LE(truth.congruency_residual(spec.w), 1e-12);
  for (double z = 0.3; z <= 1.7; z += 0.05) {
    EXPECT_NEAR(truth.theta_star[0](z), z + 0.2, 1e-12);
    EXPECT_NEAR(truth.theta_star[1](z), z - 0.2, 1e-12);
  }
  EXPECT_NEAR(fair_bayes(spec, truth, 0, 0.7), 0.9, 1e-12);
  EXPECT_NEAR(fair_bayes(spec, truth, 1, 0.7), 0.9, 1e-12);
}

TEST(GroundTruth, GaussianMapsAreAffine) {
  auto spec = ScenarioSpec::defaults(ScenarioKind::kGaussian);
  spec.w = Weights({0.3, 0.7});
  const auto truth = make_truth(spec);
  const double mbar = 0.3 * 0.0 + 0.7 * 1.0;
  const double sbar = 0.3 * 1.0 + 0.7 * 2.0;
  for (double x = -2.0; x <= 2.0; x += 0.1) {
    for (std::size_t s = 0; s < 2; ++s) {
      const auto [m, sd] = spec.gaussian[s];
      const double z = spec.f_star(s, x);
      EXPECT_NEAR(truth.theta_star[s](z), mbar + sbar * (z - m) / sd, 1e-9) << s << " " << x;
    }
  }
  EXPECT_LE(truth.congruency_residual(spec.w), 1e-12);
  EXPECT_GT(truth.poincare_constant, 0.0);
}

TEST(GroundTruth, NonlinearTruthIsCongruentAndMonotone) {
  const auto spec = ScenarioSpec::defaults(ScenarioKind::kNonlinear);
  const auto truth = make_truth(spec);
  EXPECT_LE(truth.congruency_residual(spec.w), 1e-12);
  // Both groups share the fair law: theta*_s(f*_s(X)) has the same quantiles.
  // Exact on the 1024-interval table, second-order accurate between its levels.
  for (std::size_t k = 0; k <= 1024; k += 37) {
    const double t = static_cast<double>(k) / 1024.0;
    EXPECT_NEAR(truth.theta_star[0](spec.prediction_quantile(0, t)),
                truth.theta_star[1](spec.prediction_quantile(1, t)), 1e-12);
  }
  for (double t = 0.01; t < 1.0; t += 0.07) {
    EXPECT_NEAR(truth.theta_star[0](spec.prediction_quantile(0, t)),
                truth.theta_star[1](spec.prediction_quantile(1, t)), 1e-6);
  }
}

TEST(Scenario, ValidationErrors) {
  auto spec = ScenarioSpec::defaults(ScenarioKind::kTranslation);
  spec.shifts = {0.0};
  EXPECT_THROW(spec.validate(), ConfigError);
  spec = ScenarioSpec::defaults(ScenarioKind::kTranslation);
  spec.shifts = {0.0, 1.2};  // f* reaches 2.5, far outside [0, 2]
  try {
    spec.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("group 1"), std::string::npos) << e.what();
  }
  spec = ScenarioSpec::defaults(ScenarioKind::kNonlinear);
  spec.links[0] = {0.0, 0.5, -0.5};
  EXPECT_THROW(spec.validate(), ConfigError);
  // Truth maps must respect the Lipschitz box: slope 3 exceeds L = 2.
  spec = ScenarioSpec::defaults(ScenarioKind::kGaussian);
  spec.gaussian = {{0.0, 0.5}, {1.0, 2.5}};
  spec.omega = DomainInterval(-8.0, 10.0);
  EXPECT_THROW(make_truth(spec), ConfigError);
  EXPECT_THROW(scenario_kind_from_string("cubic"), ConfigError);
}

TEST(Evaluation, FeaturesAndTruthError) {
  auto spec = ScenarioSpec::defaults(ScenarioKind::kTranslation);
  EvalSpec eval;
  eval.mode = EvalMode::kQuadrature;
  eval.resolution = 4096;
  const auto feats = evaluation_features(spec, eval);
  ASSERT_EQ(feats.size(), 2u);
  EXPECT_EQ(feats[0].rows(), 4096u);
  EXPECT_NEAR(feats[0].row(0)[0], 0.3 + 0.5 / 4096.0, 1e-15);

  // A 1-NN base trained on the evaluation features themselves returns f*_s exactly
  // there; with identity maps the error is the translation distance sum_s w_s 0.2^2.
  const auto truth = make_truth(spec);
  EvalSpec fresh;
  fresh.fresh_sample_sizes = {20000, 20000};
  fresh.seed = 1;
  const auto eval_x = evaluation_features(spec, fresh);
  std::vector<BaseRegressor> base;
  for (std::size_t s = 0; s < 2; ++s) {
    std::vector<double> ys;
    for (double x : eval_x[s].data()) ys.push_back(spec.f_star(s, x));
    GroupSample g{s, eval_x[s], ys};
    BaseConfig cfg;
    cfg.k = 1;
    base.push_back(BaseRegressor::fit(g, spec.omega, cfg));
  }
  const FairRegressor id(base, identity_family(KnotGrid(spec.omega, 3), spec.w, spec.lip));
  EXPECT_NEAR(truth_error(id, truth, spec, fresh), 0.04, 1e-12);
}
