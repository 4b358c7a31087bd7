#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "fairbary/error.hpp"
#include "fairbary/serialize.hpp"

using namespace fairbary;
namespace fs = std::filesystem;

namespace {

const DomainInterval kOmega(0.0, 2.0);
const LipschitzBound kLip(2.0);

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fairbary_test_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(MapJson, RoundTripIsBitExact) {
  // Values that need all 17 significant digits to survive a text round trip.
  const MonotoneMap map({0.0, 1.0 / 3.0, 2.0 / 3.0, 2.0},
                        {0.1 + 0.2, 1.1 / 3.0 + 0.3, 2.2 / 3.0 + 0.3, 2.5 + 1e-13}, kLip);
  const auto text = map_to_json(map).dump();
  const auto back = map_from_json(Json::parse(text));
  EXPECT_TRUE(back == map);
  for (std::size_t k = 0; k < map.knots().size(); ++k) {
    EXPECT_EQ(back.values()[k], map.values()[k]);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", map.values()[k]);
    EXPECT_EQ(std::stod(buf), back.values()[k]);
  }
}

TEST(MapJson, RejectsMalformedMaps) {
  EXPECT_THROW(map_from_json(Json{{"knots", {0.0, 1.0}}}), SchemaError);
  EXPECT_THROW(map_from_json(Json{{"knots", {0.0, 1.0}}, {"values", {0.0, 3.0}}, {"L", 2.0}}),
               SchemaError);
  auto j = map_to_json(MonotoneMap::identity(kOmega, kLip));
  j["c_inf"] = 0.5;
  EXPECT_THROW(map_from_json(j), SchemaError);
  j = map_to_json(MonotoneMap::identity(kOmega, kLip));
  j["knots"] = "nope";
  EXPECT_THROW(map_from_json(j), SchemaError);
}

TEST(FamilyJson, RoundTripPreservesEveryMap) {
  const Weights w({0.2, 0.3, 0.5});
  const KnotGrid grid(kOmega, 3);
  std::vector<std::vector<double>> rows(2);
  for (double k : grid.knots()) {
    rows[0].push_back(0.1 + 1.1 * k);
    rows[1].push_back(-0.05 + 0.95 * k);
  }
  const auto fam = make_congruent(rows, grid, w, kLip);
  const auto back = family_from_json(Json::parse(family_to_json(fam).dump()));
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t s = 0; s < 3; ++s) EXPECT_TRUE(back.map(s) == fam.map(s));
  auto j = family_to_json(fam);
  j["inverse_values"][0][2] = 5.0;
  EXPECT_THROW(family_from_json(j), SchemaError);
  j = family_to_json(fam);
  j["grid"]["level"] = 40;
  EXPECT_THROW(family_from_json(j), SchemaError);
}

TEST(DataCsv, RoundTripAndGrouping) {
  std::istringstream in("group,y,x1,x2\na,0.5,1,2\nb,1.5,3,4\na,0.25,5,6\n\n");
  const auto t = read_data_csv(in, true);
  ASSERT_EQ(t.labels, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(t.dim, 2u);
  EXPECT_EQ(t.rows, 3u);
  EXPECT_EQ(t.row_ids[0], (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(t.samples[0].xs.row(1)[1], 6.0);
  std::ostringstream out;
  write_data_csv(out, t.samples, t.labels);
  std::istringstream again(out.str());
  const auto t2 = read_data_csv(again, true);
  EXPECT_EQ(t2.samples[0].ys, t.samples[0].ys);
  EXPECT_EQ(t2.samples[1].ys, t.samples[1].ys);
}

TEST(DataCsv, ParseErrorsAreInputErrors) {
  auto parse = [](const std::string& text, bool need_y) {
    std::istringstream in(text);
    return read_data_csv(in, need_y);
  };
  EXPECT_THROW(parse("", true), InputError);
  EXPECT_THROW(parse("label,y,x1\na,1,2\n", true), InputError);
  EXPECT_THROW(parse("group,x1\na,2\n", true), InputError);
  EXPECT_THROW(parse("group,y,x2\na,1,2\n", true), InputError);
  EXPECT_THROW(parse("group,y,x1\na,1\n", true), InputError);
  EXPECT_THROW(parse("group,y,x1\na,one,2\n", true), InputError);
  EXPECT_THROW(parse("group,y,x1\na,nan,2\n", true), InputError);
  EXPECT_FALSE(parse("group,x1\na,2\n", false).has_y);
}

TEST(TruthSidecar, RoundTripAndCorruption) {
  auto spec = ScenarioSpec::defaults(ScenarioKind::kNonlinear);
  spec.seed = 5;
  const auto truth = make_truth(spec);
  const std::vector<std::string> labels{"g0", "g1"};
  const auto j = Json::parse(truth_to_json(spec, truth, labels).dump());
  const auto back = truth_from_json(j);
  EXPECT_EQ(back.labels, labels);
  EXPECT_EQ(back.spec.seed, 5u);
  for (std::size_t s = 0; s < 2; ++s) EXPECT_TRUE(back.truth.theta_star[s] == truth.theta_star[s]);

  auto bad = j;
  bad["theta_star"][1]["values"][3] = bad["theta_star"][1]["values"][3].get<double>() + 1e-6;
  EXPECT_THROW(truth_from_json(bad), SidecarError);
  bad = j;
  bad["labels"] = {"g0"};
  EXPECT_THROW(truth_from_json(bad), SidecarError);
  bad = j;
  bad.erase("scenario");
  EXPECT_THROW(truth_from_json(bad), SidecarError);
  bad = j;
  bad["format"] = "something-else";
  EXPECT_THROW(truth_from_json(bad), SidecarError);
}

TEST(ScenarioJson, RoundTrip) {
  auto spec = ScenarioSpec::defaults(ScenarioKind::kGaussian);
  spec.w = Weights({0.4, 0.6});
  spec.noise_sd = 0.05;
  spec.seed = 99;
  const auto back = scenario_from_json(Json::parse(scenario_to_json(spec).dump()));
  EXPECT_EQ(back.kind, spec.kind);
  EXPECT_EQ(back.gaussian, spec.gaussian);
  EXPECT_EQ(back.w.values()[1], 0.6);
  EXPECT_EQ(back.noise_sd, 0.05);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.omega.lo, spec.omega.lo);
}

TEST(Bundle, SaveLoadReproducesPredictions) {
  auto spec = ScenarioSpec::defaults(ScenarioKind::kTranslation);
  spec.seed = 8;
  const std::vector<std::size_t> n{600, 400};
  const auto gen = generate(spec, n);
  std::ostringstream csv;
  write_data_csv(csv, gen.samples, {"low", "high"});
  std::istringstream in(csv.str());
  const auto data = read_data_csv(in, true);

  FairConfig cfg;
  cfg.solver.seed = 8;
  const Weights w({0.6, 0.4});
  const auto fit = fit_fair(data.samples, w, kOmega, cfg);
  const auto dir = scratch("bundle");
  save_bundle(dir, fit, data, w, kOmega, cfg, Json{{"note", "test"}});
  for (const char* f : {"manifest.json", "maps.json", "fit_report.json", "trace.csv",
                        "base_data.csv", "split.json", "resolved_config.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto bundle = load_bundle(dir);
  EXPECT_EQ(bundle.labels, data.labels);
  EXPECT_EQ(bundle.w.values()[0], 0.6);
  for (std::size_t s = 0; s < 2; ++s) {
    for (double x = 0.0; x <= 2.0; x += 0.01) {
      const double q[1] = {x};
      EXPECT_EQ(bundle.model.predict(s, q), fit.model.predict(s, q)) << s << " " << x;
    }
  }
  // The split lists data-row ids; the pushforward hash is recomputable from them.
  const auto split = read_json_file(dir / "split.json", ErrorKind::kSchema).at("map_rows");
  std::vector<std::vector<double>> push(2);
  for (std::size_t s = 0; s < 2; ++s) {
    std::vector<std::size_t> local;
    for (std::size_t id : split.at(data.labels[s]).get<std::vector<std::size_t>>()) {
      const auto& ids = data.row_ids[s];
      local.push_back(static_cast<std::size_t>(std::find(ids.begin(), ids.end(), id) - ids.begin()));
    }
    push[s] = fit.model.base(s).predict_batch(data.samples[s].xs.select(local));
  }
  EXPECT_EQ(pushforward_hash(push), bundle.manifest.at("pushforward_sha256").get<std::string>());

  fs::remove(dir / "maps.json");
  EXPECT_THROW(load_bundle(dir), Error);
  EXPECT_THROW(load_bundle(scratch("missing")), InputError);
  fs::remove_all(dir);
}
