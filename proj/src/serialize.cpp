#include "fairbary/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "fairbary/fingerprint.hpp"

namespace fairbary {

namespace fs = std::filesystem;

namespace {

constexpr int kBundleVersion = 1;

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) {
  switch (kind) {
    case ErrorKind::kSchema:
      throw SchemaError(msg);
    case ErrorKind::kSidecar:
      throw SidecarError(msg);
    case ErrorKind::kInput:
      throw InputError(msg);
    default:
      throw Error(kind, msg);
  }
}

template <typename T>
T get_field(const Json& j, const char* key, ErrorKind kind) {
  if (!j.is_object() || !j.contains(key)) fail(kind, fmt::format("missing field '{}'", key));
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(kind, fmt::format("field '{}' has the wrong type: {}", key, e.what()));
  }
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos
                                                               ? std::string::npos
                                                               : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& text, std::size_t line, const char* column) {
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty() || !std::isfinite(v)) {
    throw InputError(fmt::format("line {}: cannot parse {} value '{}'", line, column, text));
  }
  return v;
}

std::vector<double> to_doubles(std::span<const double> v) { return {v.begin(), v.end()}; }

}  // namespace

Json map_to_json(const MonotoneMap& map) {
  return Json{{"knots", to_doubles(map.knots())},
              {"values", to_doubles(map.values())},
              {"c_inf", map.c_inf()},
              {"c_sup", map.c_sup()},
              {"L", map.lipschitz().L}};
}

MonotoneMap map_from_json(const Json& j) {
  const auto knots = get_field<std::vector<double>>(j, "knots", ErrorKind::kSchema);
  const auto values = get_field<std::vector<double>>(j, "values", ErrorKind::kSchema);
  const auto lip = get_field<double>(j, "L", ErrorKind::kSchema);
  try {
    MonotoneMap map(knots, values, LipschitzBound(lip));
    if (j.contains("c_inf") && j.at("c_inf").get<double>() != map.c_inf()) {
      throw SchemaError("stored c_inf disagrees with the knot values");
    }
    if (j.contains("c_sup") && j.at("c_sup").get<double>() != map.c_sup()) {
      throw SchemaError("stored c_sup disagrees with the knot values");
    }
    return map;
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(fmt::format("invalid monotone map: {}", e.what()));
  }
}

Json family_to_json(const CongruentFamily& family) {
  Json inverse = Json::array();
  Json maps = Json::array();
  for (std::size_t s = 0; s < family.size(); ++s) {
    inverse.push_back(to_doubles(family.inverse_values(s)));
    maps.push_back(map_to_json(family.map(s)));
  }
  const auto& omega = family.grid().domain();
  return Json{{"grid", {{"lo", omega.lo}, {"hi", omega.hi}, {"level", family.grid().level()}}},
              {"weights", to_doubles(family.weights().values())},
              {"L", family.lipschitz().L},
              {"inverse_values", inverse},
              {"maps", maps}};
}

CongruentFamily family_from_json(const Json& j) {
  if (!j.contains("grid")) throw SchemaError("family JSON lacks 'grid'");
  const Json& g = j.at("grid");
  try {
    const DomainInterval omega(get_field<double>(g, "lo", ErrorKind::kSchema),
                               get_field<double>(g, "hi", ErrorKind::kSchema));
    const KnotGrid grid(omega, get_field<int>(g, "level", ErrorKind::kSchema));
    const Weights w(get_field<std::vector<double>>(j, "weights", ErrorKind::kSchema));
    const LipschitzBound lip(get_field<double>(j, "L", ErrorKind::kSchema));
    const auto rows =
        get_field<std::vector<std::vector<double>>>(j, "inverse_values", ErrorKind::kSchema);
    return assemble_family(rows, grid, w, lip);
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(fmt::format("invalid congruent family: {}", e.what()));
  }
}

Json fit_report_to_json(const FitReport& report, const std::string& trace_file) {
  return Json{{"iterations_used", report.iterations_used},
              {"converged", report.converged},
              {"congruency_residual", report.congruency_residual},
              {"dense_congruency_residual", report.family.dense_residual()},
              {"objective", report.objective},
              {"objective_trace", trace_file}};
}

void write_trace_csv(std::ostream& os, const std::vector<double>& trace) {
  os << "iteration,value\n";
  for (std::size_t i = 0; i < trace.size(); ++i) os << fmt::format("{},{}\n", i + 1, trace[i]);
}

Json scenario_to_json(const ScenarioSpec& spec) {
  Json j{{"name", to_string(spec.kind)},
         {"weights", to_doubles(spec.w.values())},
         {"noise_sd", spec.noise_sd},
         {"omega", {spec.omega.lo, spec.omega.hi}},
         {"L", spec.lip.L},
         {"seed", spec.seed}};
  switch (spec.kind) {
    case ScenarioKind::kTranslation:
      j["shifts"] = spec.shifts;
      j["x_range"] = {spec.x_lo, spec.x_hi};
      break;
    case ScenarioKind::kGaussian: {
      Json g = Json::array();
      for (const auto& [m, sd] : spec.gaussian) g.push_back({m, sd});
      j["gaussian"] = g;
      j["x_trunc"] = spec.x_trunc;
      break;
    }
    case ScenarioKind::kNonlinear: {
      Json l = Json::array();
      for (const auto& c : spec.links) l.push_back({c[0], c[1], c[2]});
      j["links"] = l;
      break;
    }
  }
  return j;
}

ScenarioSpec scenario_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  const auto name = j.value("name", std::string("translation"));
  ScenarioSpec spec = ScenarioSpec::defaults(scenario_kind_from_string(name));
  try {
    if (j.contains("weights")) spec.w = Weights(j.at("weights").get<std::vector<double>>());
    if (j.contains("groups") && !j.contains("weights")) {
      spec.w = Weights::uniform(j.at("groups").get<std::size_t>());
    }
    if (j.contains("noise_sd")) spec.noise_sd = j.at("noise_sd").get<double>();
    if (j.contains("omega")) {
      const auto o = j.at("omega").get<std::vector<double>>();
      if (o.size() != 2) throw ConfigError("scenario omega must be [lo, hi]");
      spec.omega = DomainInterval(o[0], o[1]);
    }
    if (j.contains("L")) spec.lip = LipschitzBound(j.at("L").get<double>());
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("shifts")) spec.shifts = j.at("shifts").get<std::vector<double>>();
    if (j.contains("x_range")) {
      const auto r = j.at("x_range").get<std::vector<double>>();
      if (r.size() != 2) throw ConfigError("scenario x_range must be [lo, hi]");
      spec.x_lo = r[0];
      spec.x_hi = r[1];
    }
    if (j.contains("x_trunc")) spec.x_trunc = j.at("x_trunc").get<double>();
    if (j.contains("gaussian")) {
      spec.gaussian.clear();
      for (const auto& g : j.at("gaussian")) {
        const auto v = g.get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError("gaussian parameters must be [mean, sd]");
        spec.gaussian.emplace_back(v[0], v[1]);
      }
    }
    if (j.contains("links")) {
      spec.links.clear();
      for (const auto& l : j.at("links")) {
        const auto v = l.get<std::vector<double>>();
        if (v.size() != 3) throw ConfigError("links must be [a, b, c]");
        spec.links.push_back({v[0], v[1], v[2]});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed scenario: {}", e.what()));
  }
  return spec;
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw InputError(fmt::format("cannot write {}", path.string()));
  os << text;
  if (!os) throw InputError(fmt::format("failed writing {}", path.string()));
}

std::string read_text_file(const fs::path& path, ErrorKind missing) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(missing, fmt::format("cannot read {}", path.string()));
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Json read_json_file(const fs::path& path, ErrorKind malformed) {
  const auto text = read_text_file(path, malformed);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(malformed, fmt::format("{} is not valid JSON: {}", path.string(), e.what()));
  }
}

DataTable read_data_csv(std::istream& is, bool require_y) {
  std::string line;
  std::size_t line_no = 0;
  // Skip blank lines before the header.
  while (std::getline(is, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw InputError("data CSV is empty");
  const auto header = split_fields(line);
  if (header.empty() || header[0] != "group") {
    throw InputError("data CSV must start with a 'group' column");
  }
  DataTable table;
  std::size_t first_x = 1;
  table.has_y = header.size() > 1 && header[1] == "y";
  if (table.has_y) first_x = 2;
  if (require_y && !table.has_y) throw InputError("data CSV lacks the 'y' column");
  for (std::size_t c = first_x; c < header.size(); ++c) {
    if (header[c] != fmt::format("x{}", c - first_x + 1)) {
      throw InputError(fmt::format("unexpected column '{}' (expected x{})", header[c],
                                   c - first_x + 1));
    }
  }
  table.dim = header.size() - first_x;
  if (table.dim == 0) throw InputError("data CSV has no feature columns");

  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::vector<double>> xs;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw InputError(fmt::format("line {}: expected {} fields, got {}", line_no, header.size(),
                                   fields.size()));
    }
    if (fields[0].empty()) throw InputError(fmt::format("line {}: empty group label", line_no));
    auto [it, inserted] = index.emplace(fields[0], table.labels.size());
    if (inserted) {
      table.labels.push_back(fields[0]);
      table.samples.emplace_back();
      table.samples.back().group = it->second;
      table.row_ids.emplace_back();
      xs.emplace_back();
    }
    const std::size_t s = it->second;
    table.samples[s].ys.push_back(table.has_y ? parse_double(fields[1], line_no, "y") : 0.0);
    for (std::size_t c = first_x; c < fields.size(); ++c) {
      xs[s].push_back(parse_double(fields[c], line_no, "feature"));
    }
    table.row_ids[s].push_back(table.rows++);
  }
  for (std::size_t s = 0; s < table.samples.size(); ++s) {
    const std::size_t n = table.samples[s].ys.size();
    table.samples[s].xs = FeatureMatrix(n, table.dim, std::move(xs[s]));
  }
  return table;
}

DataTable read_data_csv(const fs::path& path, bool require_y) {
  std::ifstream is(path);
  if (!is) throw InputError(fmt::format("cannot read {}", path.string()));
  return read_data_csv(is, require_y);
}

void write_data_csv(std::ostream& os, const std::vector<GroupSample>& samples,
                    const std::vector<std::string>& labels) {
  if (samples.empty()) throw InputError("no samples to write");
  const std::size_t dim = samples[0].xs.cols();
  os << "group,y";
  for (std::size_t c = 0; c < dim; ++c) os << ",x" << (c + 1);
  os << "\n";
  for (std::size_t s = 0; s < samples.size(); ++s) {
    for (std::size_t i = 0; i < samples[s].size(); ++i) {
      os << labels.at(s) << ',' << fmt::format("{}", samples[s].ys[i]);
      for (double x : samples[s].xs.row(i)) os << ',' << fmt::format("{}", x);
      os << "\n";
    }
  }
}

Json truth_to_json(const ScenarioSpec& spec, const GroundTruth& truth,
                   const std::vector<std::string>& labels) {
  Json maps = Json::array();
  for (const auto& m : truth.theta_star) maps.push_back(map_to_json(m));
  return Json{{"format", "fairbary-truth"},
              {"version", 1},
              {"labels", labels},
              {"scenario", scenario_to_json(spec)},
              {"theta_star", maps},
              {"congruency_residual", truth.congruency_residual(spec.w)},
              {"poincare_constant_estimate", truth.poincare_constant}};
}

TruthSidecar truth_from_json(const Json& j) {
  try {
    if (get_field<std::string>(j, "format", ErrorKind::kSidecar) != "fairbary-truth") {
      throw SidecarError("truth sidecar has an unexpected format tag");
    }
    TruthSidecar out;
    out.labels = get_field<std::vector<std::string>>(j, "labels", ErrorKind::kSidecar);
    if (!j.contains("scenario")) throw SidecarError("truth sidecar lacks 'scenario'");
    out.spec = scenario_from_json(j.at("scenario"));
    out.truth = make_truth(out.spec);
    if (out.labels.size() != out.spec.groups()) {
      throw SidecarError(fmt::format("truth sidecar lists {} labels for {} groups",
                                     out.labels.size(), out.spec.groups()));
    }
    if (!j.contains("theta_star") || !j.at("theta_star").is_array() ||
        j.at("theta_star").size() != out.spec.groups()) {
      throw SidecarError("truth sidecar theta_star does not match the scenario");
    }
    for (std::size_t s = 0; s < out.spec.groups(); ++s) {
      if (!(map_from_json(j.at("theta_star")[s]) == out.truth.theta_star[s])) {
        throw SidecarError(fmt::format("truth sidecar map {} disagrees with its scenario", s));
      }
    }
    return out;
  } catch (const SidecarError&) {
    throw;
  } catch (const Error& e) {
    throw SidecarError(fmt::format("malformed truth sidecar: {}", e.what()));
  }
}

std::string pushforward_hash(const std::vector<std::vector<double>>& per_group) {
  std::vector<double> flat;
  for (const auto& g : per_group) {
    std::vector<double> sorted = g;
    std::sort(sorted.begin(), sorted.end());
    flat.push_back(static_cast<double>(sorted.size()));
    flat.insert(flat.end(), sorted.begin(), sorted.end());
  }
  return fingerprint(flat);
}

void save_bundle(const fs::path& dir, const FairFit& fit, const DataTable& data, const Weights& w,
                 const DomainInterval& omega, const FairConfig& cfg, const Json& resolved_config) {
  fs::create_directories(dir);
  const std::size_t m = data.samples.size();

  Json groups = Json::array();
  std::vector<GroupSample> base_rows;
  Json split = Json::object();
  std::vector<std::vector<double>> push;
  for (std::size_t s = 0; s < m; ++s) {
    const auto& g = data.samples[s];
    std::vector<double> bytes(g.ys.begin(), g.ys.end());
    bytes.insert(bytes.end(), g.xs.data().begin(), g.xs.data().end());
    const auto& base = fit.model.base(s);
    groups.push_back({{"label", data.labels[s]},
                      {"index", s},
                      {"n", g.size()},
                      {"data_sha256", fingerprint(bytes)},
                      {"base_hyper", base.hyper()}});
    base_rows.push_back(g.select(fit.splits[s].regression));
    std::vector<std::size_t> ids;
    for (auto i : fit.splits[s].maps) ids.push_back(data.row_ids[s][i]);
    split[data.labels[s]] = ids;
    push.emplace_back(fit.pushforward[s].points().begin(), fit.pushforward[s].points().end());
  }

  Json manifest{{"format", "fairbary-bundle"},
                {"version", kBundleVersion},
                {"groups", groups},
                {"weights", to_doubles(w.values())},
                {"omega", {omega.lo, omega.hi}},
                {"feature_dim", data.dim},
                {"L", cfg.lip.L},
                {"alpha", cfg.alpha},
                {"beta", cfg.beta},
                {"level", fit.sieve.level},
                {"seed", cfg.solver.seed},
                {"base", {{"kind", to_string(cfg.base.kind)}}},
                {"files",
                 {{"maps", "maps.json"},
                  {"fit_report", "fit_report.json"},
                  {"base_data", "base_data.csv"},
                  {"split", "split.json"},
                  {"resolved_config", "resolved_config.json"}}},
                {"pushforward_sha256", pushforward_hash(push)},
                {"w2_convention", "half"}};

  write_text_file(dir / "manifest.json", dump_json(manifest));
  write_text_file(dir / "maps.json", dump_json(family_to_json(fit.report.family)));
  write_text_file(dir / "fit_report.json", dump_json(fit_report_to_json(fit.report, "trace.csv")));
  std::ostringstream trace;
  write_trace_csv(trace, fit.report.objective_trace);
  write_text_file(dir / "trace.csv", trace.str());
  std::ostringstream base_csv;
  write_data_csv(base_csv, base_rows, data.labels);
  write_text_file(dir / "base_data.csv", base_csv.str());
  write_text_file(dir / "split.json", dump_json(Json{{"map_rows", split}}));
  write_text_file(dir / "resolved_config.json", dump_json(resolved_config));
}

Bundle load_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError(fmt::format("bundle {} not found", dir.string()));
  Bundle out;
  out.manifest = read_json_file(dir / "manifest.json", ErrorKind::kSchema);
  const Json& man = out.manifest;
  try {
    if (get_field<std::string>(man, "format", ErrorKind::kSchema) != "fairbary-bundle") {
      throw SchemaError("not a fairbary bundle");
    }
    if (get_field<int>(man, "version", ErrorKind::kSchema) != kBundleVersion) {
      throw SchemaError("unsupported bundle version");
    }
    const auto omega = get_field<std::vector<double>>(man, "omega", ErrorKind::kSchema);
    if (omega.size() != 2) throw SchemaError("manifest omega must be [lo, hi]");
    out.omega = DomainInterval(omega[0], omega[1]);
    out.w = Weights(get_field<std::vector<double>>(man, "weights", ErrorKind::kSchema));
    const auto kind = base_kind_from_string(man.at("base").at("kind").get<std::string>());
    const auto& groups = man.at("groups");
    if (!groups.is_array() || groups.size() != out.w.size()) {
      throw SchemaError("manifest groups do not match the weights");
    }
    for (const auto& g : groups) out.labels.push_back(g.at("label").get<std::string>());

    const CongruentFamily family =
        family_from_json(read_json_file(dir / "maps.json", ErrorKind::kSchema));
    if (family.size() != out.labels.size()) throw SchemaError("maps.json group count mismatch");

    const DataTable base = read_data_csv(dir / "base_data.csv", true);
    std::vector<BaseRegressor> regs;
    for (std::size_t s = 0; s < out.labels.size(); ++s) {
      const auto it = std::find(base.labels.begin(), base.labels.end(), out.labels[s]);
      if (it == base.labels.end()) {
        throw SchemaError(fmt::format("base data lacks group '{}'", out.labels[s]));
      }
      const auto& sample = base.samples[static_cast<std::size_t>(it - base.labels.begin())];
      BaseConfig cfg;
      cfg.kind = kind;
      const double hyper = groups[s].at("base_hyper").get<double>();
      if (kind == BaseKind::kKnn) {
        cfg.k = static_cast<std::size_t>(hyper);
      } else {
        cfg.bandwidth = hyper;
      }
      regs.push_back(BaseRegressor::fit(sample, out.omega, cfg));
    }
    out.model = FairRegressor(std::move(regs), family);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(fmt::format("malformed bundle manifest: {}", e.what()));
  } catch (const InputError& e) {
    throw SchemaError(fmt::format("bundle data unreadable: {}", e.what()));
  }
  return out;
}

}  // namespace fairbary
