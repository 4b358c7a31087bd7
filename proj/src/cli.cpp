#include "fairbary/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fairbary/error.hpp"
#include "fairbary/log.hpp"

namespace fairbary::cli {

namespace fs = std::filesystem;

namespace {

const std::set<std::string> kTopKeys{"input", "output", "bundle", "truth",  "seed",   "weights",
                                     "omega", "L",      "alpha",  "beta",   "level",  "base",
                                     "solver", "scenario", "n",   "eval",   "sweep",  "quiet"};

void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{} must be a JSON object", where));
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
  }
}

std::uint64_t parse_seed(const std::string& text, const char* source) {
  std::uint64_t value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc() || ptr != end) {
    throw ConfigError(fmt::format("{} is not an unsigned 64-bit integer: '{}'", source, text));
  }
  return value;
}

std::optional<fs::path> path_field(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return fs::path(j.at(key).get<std::string>());
}

Json path_json(const std::optional<fs::path>& p) { return p ? Json(p->string()) : Json(); }

StepRule step_rule_from_string(const std::string& name) {
  if (name == "constant" || name == "fista") return StepRule::kConstant;
  if (name == "inverse_sqrt" || name == "inverse-sqrt") return StepRule::kInverseSqrt;
  throw ConfigError(fmt::format("unknown step rule '{}' (constant, inverse_sqrt)", name));
}

std::string to_string(StepRule rule) {
  return rule == StepRule::kConstant ? "constant" : "inverse_sqrt";
}

std::string num(double v) { return fmt::format("{}", v); }

fs::path require(const std::optional<fs::path>& p, const char* what) {
  if (!p) throw ConfigError(fmt::format("missing required setting '{}'", what));
  return *p;
}

fs::path sibling(const fs::path& file, const char* suffix) {
  return fs::path(file.string() + suffix);
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
}

RunConfig resolve_impl(const std::string& command, const Json& j) {
  RunConfig cfg;
  cfg.command = command;
  check_keys(j, kTopKeys, "config");
  cfg.input = path_field(j, "input");
  cfg.output = path_field(j, "output");
  cfg.bundle = path_field(j, "bundle");
  cfg.truth = path_field(j, "truth");

  if (j.contains("seed") && !j.at("seed").is_null()) {
    const auto& s = j.at("seed");
    cfg.seed = s.is_string() ? parse_seed(s.get<std::string>(), "seed") : s.get<std::uint64_t>();
  } else if (const char* env = std::getenv("FAIRBARY_SEED"); env != nullptr && *env != '\0') {
    cfg.seed = parse_seed(env, "FAIRBARY_SEED");
  }

  if (j.contains("weights") && !j.at("weights").is_null()) {
    cfg.weights = j.at("weights").get<std::vector<double>>();
    Weights check(*cfg.weights);
  }
  if (j.contains("omega") && !j.at("omega").is_null()) {
    const auto o = j.at("omega").get<std::vector<double>>();
    if (o.size() != 2) throw ConfigError("omega must be [lo, hi]");
    cfg.omega = DomainInterval(o[0], o[1]);
  }

  FairConfig& fit = cfg.fit;
  if (j.contains("L")) fit.lip = LipschitzBound(j.at("L").get<double>());
  fit.alpha = j.value("alpha", 2.0);
  fit.beta = j.value("beta", 1.0);
  if (!(fit.alpha > 0.0) || !(fit.beta > 0.0)) throw ConfigError("alpha and beta must be positive");
  if (j.contains("level") && !j.at("level").is_null()) {
    fit.level = j.at("level").get<int>();
    if (*fit.level < 0 || *fit.level > 20) throw ConfigError("level must lie in [0, 20]");
  }
  if (j.contains("base")) {
    const auto& b = j.at("base");
    check_keys(b, {"kind", "k", "bandwidth"}, "base");
    fit.base.kind = base_kind_from_string(b.value("kind", std::string("knn")));
    if (b.contains("k") && !b.at("k").is_null()) {
      fit.base.k = b.at("k").get<std::size_t>();
      if (*fit.base.k < 1) throw ConfigError("base.k must be at least 1");
    }
    if (b.contains("bandwidth") && !b.at("bandwidth").is_null()) {
      fit.base.bandwidth = b.at("bandwidth").get<double>();
      if (!(*fit.base.bandwidth > 0.0)) throw ConfigError("base.bandwidth must be positive");
    }
  }
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    check_keys(s, {"max_iters", "tol_rel_obj", "step_rule", "step_scale", "window"}, "solver");
    auto& sv = fit.solver;
    sv.max_iters = s.value("max_iters", sv.max_iters);
    sv.tol_rel_obj = s.value("tol_rel_obj", sv.tol_rel_obj);
    if (s.contains("step_rule")) sv.step_rule = step_rule_from_string(s.at("step_rule"));
    sv.step_scale = s.value("step_scale", sv.step_scale);
    sv.window = s.value("window", sv.window);
  }
  fit.solver.seed = cfg.seed;
  fit.solver.validate();

  if (j.contains("scenario")) {
    cfg.scenario = scenario_from_json(j.at("scenario"));
  } else {
    cfg.scenario = ScenarioSpec::defaults(ScenarioKind::kTranslation);
  }
  cfg.scenario.seed = cfg.seed;
  if (j.contains("L")) cfg.scenario.lip = fit.lip;
  if (cfg.weights) cfg.scenario.w = Weights(*cfg.weights);

  const std::size_t m = cfg.scenario.groups();
  if (j.contains("n")) {
    const auto& n = j.at("n");
    if (n.is_array()) {
      cfg.n = n.get<std::vector<std::size_t>>();
    } else {
      cfg.n.assign(m, n.get<std::size_t>());
    }
  } else {
    cfg.n.assign(m, 1000);
  }

  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    check_keys(e, {"fresh_size"}, "eval");
    if (e.contains("fresh_size")) cfg.eval.fresh_sample_sizes.assign(m, e.at("fresh_size"));
  }

  cfg.sweep.scenario = cfg.scenario;
  cfg.sweep.n_values = {256, 512, 1024, 2048, 4096, 8192, 16384};
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    check_keys(s, {"n_values", "replicates", "threads", "failure_budget", "oracle_level"}, "sweep");
    if (s.contains("n_values")) cfg.sweep.n_values = s.at("n_values").get<std::vector<std::size_t>>();
    cfg.sweep.replicates = s.value("replicates", cfg.sweep.replicates);
    cfg.sweep_options.threads = s.value("threads", 0);
    cfg.sweep_options.failure_budget = s.value("failure_budget", 0.1);
    cfg.sweep_options.oracle_level = s.value("oracle_level", 10);
  }
  if (cfg.sweep_options.threads < 0) throw ConfigError("sweep.threads must be non-negative");
  if (!(cfg.sweep_options.failure_budget >= 0.0 && cfg.sweep_options.failure_budget <= 1.0)) {
    throw ConfigError("sweep.failure_budget must lie in [0, 1]");
  }
  if (cfg.sweep_options.oracle_level < 1 || cfg.sweep_options.oracle_level > 16) {
    throw ConfigError("sweep.oracle_level must lie in [1, 16]");
  }
  cfg.sweep_options.fit = fit;
  cfg.sweep_options.eval = cfg.eval;
  cfg.sweep_options.seed = cfg.seed;
  cfg.quiet = j.value("quiet", false);

  if (command == "simulate") {
    cfg.scenario.validate();
    if (cfg.n.size() != m) {
      throw ConfigError(fmt::format("n lists {} sizes for {} groups", cfg.n.size(), m));
    }
    for (auto v : cfg.n) {
      if (v < 2) throw ConfigError("simulate needs at least 2 rows per group");
    }
  }
  if (command == "sweep") cfg.sweep.validate();
  cfg.eval.validate(m);
  return cfg;
}

}  // namespace

Json RunConfig::to_json() const {
  Json base{{"kind", to_string(fit.base.kind)},
            {"k", fit.base.k ? Json(*fit.base.k) : Json()},
            {"bandwidth", fit.base.bandwidth ? Json(*fit.base.bandwidth) : Json()}};
  const auto& sv = fit.solver;
  Json j{{"input", path_json(input)},
         {"output", path_json(output)},
         {"bundle", path_json(bundle)},
         {"truth", path_json(truth)},
         {"seed", seed},
         {"weights", weights ? Json(*weights) : Json()},
         {"omega", omega ? Json{omega->lo, omega->hi} : Json()},
         {"L", fit.lip.L},
         {"alpha", fit.alpha},
         {"beta", fit.beta},
         {"level", fit.level ? Json(*fit.level) : Json()},
         {"base", base},
         {"solver",
          {{"max_iters", sv.max_iters},
           {"tol_rel_obj", sv.tol_rel_obj},
           {"step_rule", to_string(sv.step_rule)},
           {"step_scale", sv.step_scale},
           {"window", sv.window}}},
         {"scenario", scenario_to_json(scenario)},
         {"n", n},
         {"eval", {{"fresh_size", eval.fresh_size(0)}}},
         {"sweep",
          {{"n_values", sweep.n_values},
           {"replicates", sweep.replicates},
           {"threads", sweep_options.threads},
           {"failure_budget", sweep_options.failure_budget},
           {"oracle_level", sweep_options.oracle_level}}},
         {"quiet", quiet}};
  return j;
}

RunConfig resolve(const std::string& command, const Json& config) {
  try {
    return resolve_impl(command, config);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed config: {}", e.what()));
  }
}

int cmd_simulate(const RunConfig& cfg) {
  const fs::path dir = require(cfg.output, "output");
  const Generated data = generate(cfg.scenario, cfg.n);
  std::vector<std::string> labels;
  for (std::size_t s = 0; s < cfg.scenario.groups(); ++s) labels.push_back(fmt::format("g{}", s));
  fs::create_directories(dir);
  std::ostringstream csv;
  write_data_csv(csv, data.samples, labels);
  write_text_file(dir / "data.csv", csv.str());
  write_text_file(dir / "truth.json", dump_json(truth_to_json(cfg.scenario, data.truth, labels)));
  write_text_file(dir / "resolved_config.json", dump_json(cfg.to_json()));
  std::size_t rows = 0;
  for (auto v : cfg.n) rows += v;
  log::info("simulated {} rows of the {} scenario into {}", rows, to_string(cfg.scenario.kind),
            dir.string());
  return 0;
}

int cmd_fit(const RunConfig& cfg) {
  const fs::path input = require(cfg.input, "input");
  const fs::path dir = cfg.output ? *cfg.output : require(cfg.bundle, "output");
  if (!cfg.omega) throw ConfigError("fit needs the outcome domain 'omega'");
  const DataTable data = read_data_csv(input, true);
  const std::size_t m = data.samples.size();
  if (m < 2) throw InputError(fmt::format("fit needs at least 2 groups, found {}", m));

  Weights w;
  if (cfg.weights) {
    if (cfg.weights->size() != m) {
      throw ConfigError(fmt::format("{} weights given for {} groups", cfg.weights->size(), m));
    }
    w = Weights(*cfg.weights);
  } else {
    std::vector<std::size_t> counts;
    for (const auto& g : data.samples) counts.push_back(g.size());
    w = Weights::from_counts(counts);
  }

  const FairFit fit = fit_fair(data.samples, w, *cfg.omega, cfg.fit);
  RunConfig resolved = cfg;
  resolved.weights = std::vector<double>(w.values().begin(), w.values().end());
  save_bundle(dir, fit, data, w, *cfg.omega, cfg.fit, resolved.to_json());
  log::info("fitted {} groups at sieve level {}: objective {}, {} iterations{}", m,
            fit.sieve.level, fit.report.objective, fit.report.iterations_used,
            fit.report.converged ? "" : " (not converged)");
  return 0;
}

namespace {

struct Located {
  std::vector<std::size_t> bundle_index;  // data group -> bundle group
};

Located locate_groups(const DataTable& data, const Bundle& bundle) {
  Located out;
  for (const auto& label : data.labels) {
    const auto it = std::find(bundle.labels.begin(), bundle.labels.end(), label);
    if (it == bundle.labels.end()) {
      throw SchemaError(fmt::format("group label '{}' is not in the bundle", label));
    }
    out.bundle_index.push_back(static_cast<std::size_t>(it - bundle.labels.begin()));
  }
  const std::size_t dim = bundle.model.base(0).dim();
  if (data.dim != dim) {
    throw SchemaError(
        fmt::format("data has {} features but the bundle was fitted on {}", data.dim, dim));
  }
  return out;
}

}  // namespace

int cmd_transform(const RunConfig& cfg) {
  const Bundle bundle = load_bundle(require(cfg.bundle, "bundle"));
  const DataTable data = read_data_csv(require(cfg.input, "input"), false);
  const fs::path out = require(cfg.output, "output");
  const Located loc = locate_groups(data, bundle);

  struct Row {
    std::size_t group;
    double base;
    double fair;
  };
  std::vector<Row> rows(data.rows);
  for (std::size_t g = 0; g < data.samples.size(); ++g) {
    const std::size_t s = loc.bundle_index[g];
    const auto base = bundle.model.base(s).predict_batch(data.samples[g].xs);
    const auto& map = bundle.model.maps().map(s);
    for (std::size_t i = 0; i < base.size(); ++i) {
      rows[data.row_ids[g][i]] = {g, base[i], map.eval(base[i])};
    }
  }
  std::ostringstream os;
  os << "row_id,group,base_prediction,fair_prediction\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    os << fmt::format("{},{},{},{}\n", r, data.labels[rows[r].group], num(rows[r].base),
                      num(rows[r].fair));
  }
  ensure_parent(out);
  write_text_file(out, os.str());
  write_text_file(sibling(out, ".config.json"), dump_json(cfg.to_json()));
  log::info("transformed {} rows into {}", rows.size(), out.string());
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  const Bundle bundle = load_bundle(require(cfg.bundle, "bundle"));
  const DataTable data = read_data_csv(require(cfg.input, "input"), true);
  const fs::path out = require(cfg.output, "output");
  const Located loc = locate_groups(data, bundle);

  std::optional<TruthSidecar> truth;
  if (cfg.truth) {
    truth = truth_from_json(read_json_file(*cfg.truth, ErrorKind::kSidecar));
    if (truth->spec.groups() != bundle.labels.size()) {
      throw SidecarError("truth sidecar and bundle disagree on the number of groups");
    }
    for (const auto& label : data.labels) {
      if (std::find(truth->labels.begin(), truth->labels.end(), label) == truth->labels.end()) {
        throw SidecarError(fmt::format("truth sidecar has no group '{}'", label));
      }
    }
    if (data.dim != 1) throw SidecarError("truth sidecars describe one-feature scenarios only");
  }

  std::ostringstream os;
  os << "metric,group,value\n";
  std::vector<EmpiricalMeasure> base_laws, fair_laws;
  std::vector<double> group_w;
  double mse_base_all = 0.0, mse_fair_all = 0.0, truth_err = 0.0, wsum = 0.0;
  for (std::size_t g = 0; g < data.samples.size(); ++g) {
    const std::size_t s = loc.bundle_index[g];
    const auto& sample = data.samples[g];
    const auto base = bundle.model.base(s).predict_batch(sample.xs);
    const auto& map = bundle.model.maps().map(s);
    std::vector<double> fair(base.size());
    double mb = 0.0, mf = 0.0, te = 0.0;
    std::size_t truth_s = 0;
    if (truth) {
      truth_s = static_cast<std::size_t>(
          std::find(truth->labels.begin(), truth->labels.end(), data.labels[g]) -
          truth->labels.begin());
    }
    for (std::size_t i = 0; i < base.size(); ++i) {
      fair[i] = map.eval(base[i]);
      mb += (base[i] - sample.ys[i]) * (base[i] - sample.ys[i]);
      mf += (fair[i] - sample.ys[i]) * (fair[i] - sample.ys[i]);
      if (truth) {
        const double d =
            fair[i] - fair_bayes(truth->spec, truth->truth, truth_s, sample.xs.row(i)[0]);
        te += d * d;
      }
    }
    const double n = static_cast<double>(base.size());
    mb /= n;
    mf /= n;
    te /= n;
    const double ws = bundle.w[s];
    mse_base_all += ws * mb;
    mse_fair_all += ws * mf;
    truth_err += ws * te;
    wsum += ws;
    os << fmt::format("mse_base,{},{}\n", data.labels[g], num(mb));
    os << fmt::format("mse_fair,{},{}\n", data.labels[g], num(mf));
    base_laws.emplace_back(std::vector<double>(base.begin(), base.end()));
    fair_laws.emplace_back(std::move(fair));
    group_w.push_back(ws);
  }
  os << fmt::format("mse_base,all,{}\n", num(mse_base_all / wsum));
  os << fmt::format("mse_fair,all,{}\n", num(mse_fair_all / wsum));

  if (data.samples.size() >= 2) {
    const Weights w(group_w);
    const auto rep_fair = unfairness_of(fair_laws, w);
    const auto rep_base = unfairness_of(base_laws, w);
    os << fmt::format("unfairness_upper_bound,fair,{}\n", num(rep_fair.upper_bound));
    os << fmt::format("pairwise_max_w2,fair,{}\n", num(rep_fair.pairwise_max_w2));
    os << fmt::format("ks_max,fair,{}\n", num(rep_fair.ks_max));
    os << fmt::format("unfairness_upper_bound,base,{}\n", num(rep_base.upper_bound));
    os << fmt::format("pairwise_max_w2,base,{}\n", num(rep_base.pairwise_max_w2));
    os << fmt::format("ks_max,base,{}\n", num(rep_base.ks_max));
  } else {
    log::warn("unfairness needs at least two groups in the evaluation data");
  }
  if (truth) os << fmt::format("truth_error,all,{}\n", num(truth_err / wsum));

  ensure_parent(out);
  write_text_file(out, os.str());
  Json meta{{"w2_convention", "half: W2^2 = inf E[(Z - T(Z))^2 / 2]"},
            {"mse", "mean squared error of predictions against the observed y"},
            {"truth_error", "weighted mean squared distance to the fair Bayes-optimal regressor"},
            {"weights", "bundle weights renormalised over the groups present"},
            {"resolved_config", cfg.to_json()}};
  write_text_file(sibling(out, ".meta.json"), dump_json(meta));
  log::info("wrote metrics for {} groups to {}", data.samples.size(), out.string());
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  const fs::path dir = require(cfg.output, "output");
  const SweepResult result = run_sweep(cfg.sweep, cfg.sweep_options);
  fs::create_directories(dir);
  write_sweep(dir, result, cfg.sweep, cfg.sweep_options);
  write_text_file(dir / "resolved_config.json", dump_json(cfg.to_json()));
  log::info("sweep: {} cells, {} failed; fitted slope {}, theoretical {}", result.cells.size(),
            result.failures, result.fitted_slope, result.theoretical_slope);
  if (!result.within_budget) {
    throw Error(ErrorKind::kSweepBudget,
                fmt::format("{} of {} sweep cells failed, above the budget of {}", result.failures,
                            result.cells.size(), cfg.sweep_options.failure_budget));
  }
  return 0;
}

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> input, output, bundle, truth, base, step_rule, scenario;
  std::optional<std::string> seed;
  std::optional<double> L, alpha, beta, bandwidth, tol;
  std::optional<int> level, threads;
  std::optional<std::size_t> k, max_iters, replicates, eval_size;
  std::vector<double> weights, omega;
  std::vector<std::size_t> n, n_values;
  bool quiet = false;
};

void add_options(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON config file");
  app->add_option("--input", o.input, "data CSV");
  app->add_option("--output", o.output, "output file or directory");
  app->add_option("--bundle", o.bundle, "model bundle directory");
  app->add_option("--truth", o.truth, "truth.json sidecar");
  app->add_option("--seed", o.seed, "master seed");
  app->add_option("--L", o.L, "bi-Lipschitz bound of the maps");
  app->add_option("--alpha", o.alpha, "sieve approximation exponent");
  app->add_option("--beta", o.beta, "sieve entropy exponent");
  app->add_option("--level", o.level, "sieve level (default from sample size)");
  app->add_option("--weights", o.weights, "group weights, comma separated")->delimiter(',');
  app->add_option("--omega", o.omega, "outcome domain lo,hi")->delimiter(',');
  app->add_option("--base", o.base, "base regressor: knn or kernel");
  app->add_option("--k", o.k, "kNN neighbours");
  app->add_option("--bandwidth", o.bandwidth, "kernel bandwidth");
  app->add_option("--max-iters", o.max_iters, "solver iteration cap");
  app->add_option("--tol", o.tol, "relative objective tolerance");
  app->add_option("--step-rule", o.step_rule, "constant or inverse_sqrt");
  app->add_option("--n", o.n, "rows per group, comma separated")->delimiter(',');
  app->add_option("--scenario", o.scenario, "translation, gaussian or nonlinear");
  app->add_option("--replicates", o.replicates, "sweep replicates");
  app->add_option("--n-values", o.n_values, "sweep sample sizes")->delimiter(',');
  app->add_option("--threads", o.threads, "sweep worker threads (0: all)");
  app->add_option("--eval-size", o.eval_size, "fresh evaluation rows per group");
  app->add_flag("--quiet", o.quiet, "suppress progress messages");
}

Json merged_config(const Overrides& o) {
  Json j = Json::object();
  if (!o.config.empty()) j = read_json_file(o.config, ErrorKind::kConfig);
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  auto sub = [&](const char* key) -> Json& {
    if (!j.contains(key) || !j[key].is_object()) j[key] = Json::object();
    return j[key];
  };
  if (o.input) j["input"] = *o.input;
  if (o.output) j["output"] = *o.output;
  if (o.bundle) j["bundle"] = *o.bundle;
  if (o.truth) j["truth"] = *o.truth;
  if (o.seed) j["seed"] = parse_seed(*o.seed, "--seed");
  if (o.L) j["L"] = *o.L;
  if (o.alpha) j["alpha"] = *o.alpha;
  if (o.beta) j["beta"] = *o.beta;
  if (o.level) j["level"] = *o.level;
  if (!o.weights.empty()) j["weights"] = o.weights;
  if (!o.omega.empty()) j["omega"] = o.omega;
  if (o.base) sub("base")["kind"] = *o.base;
  if (o.k) sub("base")["k"] = *o.k;
  if (o.bandwidth) sub("base")["bandwidth"] = *o.bandwidth;
  if (o.max_iters) sub("solver")["max_iters"] = *o.max_iters;
  if (o.tol) sub("solver")["tol_rel_obj"] = *o.tol;
  if (o.step_rule) sub("solver")["step_rule"] = *o.step_rule;
  if (!o.n.empty()) j["n"] = o.n;
  if (o.scenario) {
    Json& sc = sub("scenario");
    if (sc.value("name", std::string()) != *o.scenario) sc = Json{{"name", *o.scenario}};
  }
  if (o.replicates) sub("sweep")["replicates"] = *o.replicates;
  if (!o.n_values.empty()) sub("sweep")["n_values"] = o.n_values;
  if (o.threads) sub("sweep")["threads"] = *o.threads;
  if (o.eval_size) sub("eval")["fresh_size"] = *o.eval_size;
  if (o.quiet) j["quiet"] = true;
  return j;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& err) {
  CLI::App app{"Fair regression by congruent barycenter transport maps", "fairbary"};
  app.require_subcommand(1);
  Overrides o;
  const std::vector<std::pair<const char*, const char*>> commands{
      {"simulate", "write a synthetic dataset and its truth sidecar"},
      {"fit", "fit base regressors and congruent maps, write a model bundle"},
      {"transform", "apply a bundle to new rows"},
      {"evaluate", "held-out error and unfairness metrics"},
      {"sweep", "convergence-rate study on a synthetic scenario"}};
  for (const auto& [name, help] : commands) add_options(app.add_subcommand(name, help), o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    err << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::ostringstream out;
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code(ErrorKind::kInput);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (o.quiet) log::set_quiet(true);
    const RunConfig cfg = resolve(command, merged_config(o));
    log::set_quiet(cfg.quiet);
    if (command == "simulate") return cmd_simulate(cfg);
    if (command == "fit") return cmd_fit(cfg);
    if (command == "transform") return cmd_transform(cfg);
    if (command == "evaluate") return cmd_evaluate(cfg);
    return cmd_sweep(cfg);
  } catch (const Error& e) {
    err << "fairbary " << command << ": " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "fairbary " << command << ": malformed JSON: " << e.what() << "\n";
    return exit_code(ErrorKind::kInput);
  } catch (const fs::filesystem_error& e) {
    err << "fairbary " << command << ": " << e.what() << "\n";
    return exit_code(ErrorKind::kInput);
  } catch (const std::exception& e) {
    err << "fairbary " << command << ": internal error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace fairbary::cli
