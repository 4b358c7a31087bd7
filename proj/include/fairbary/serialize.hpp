#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "fairbary/error.hpp"
#include "fairbary/estimator.hpp"
#include "fairbary/maps.hpp"
#include "fairbary/regression.hpp"
#include "fairbary/synth.hpp"

namespace fairbary {

using Json = nlohmann::json;

// Doubles are written in shortest round-trip form, so every value reloads
// bit-for-bit.

Json map_to_json(const MonotoneMap& map);
MonotoneMap map_from_json(const Json& j);

Json family_to_json(const CongruentFamily& family);
CongruentFamily family_from_json(const Json& j);

/// Scalar fields of a fit report; the trace goes to a CSV sidecar.
Json fit_report_to_json(const FitReport& report, const std::string& trace_file);
void write_trace_csv(std::ostream& os, const std::vector<double>& trace);

Json scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const Json& j);

/// Pretty-printed JSON with a trailing newline.
std::string dump_json(const Json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path, ErrorKind missing = ErrorKind::kInput);
Json read_json_file(const std::filesystem::path& path, ErrorKind malformed);

/// Grouped tabular data: header `group,y,x1,...,xd` (y optional when reading
/// prediction inputs). Labels are indexed by first appearance.
struct DataTable {
  std::vector<std::string> labels;
  std::vector<GroupSample> samples;
  std::vector<std::vector<std::size_t>> row_ids;  // data-row index of each sample row
  bool has_y = true;
  std::size_t dim = 0;
  std::size_t rows = 0;
};

DataTable read_data_csv(std::istream& is, bool require_y);
DataTable read_data_csv(const std::filesystem::path& path, bool require_y);
void write_data_csv(std::ostream& os, const std::vector<GroupSample>& samples,
                    const std::vector<std::string>& labels);

/// Truth sidecar of a simulated dataset.
Json truth_to_json(const ScenarioSpec& spec, const GroundTruth& truth,
                   const std::vector<std::string>& labels);
struct TruthSidecar {
  ScenarioSpec spec;
  GroundTruth truth;
  std::vector<std::string> labels;
};
/// Throws SidecarError on any structural problem.
TruthSidecar truth_from_json(const Json& j);

/// Model bundle directory.
struct Bundle {
  std::vector<std::string> labels;
  Weights w;
  DomainInterval omega;
  FairRegressor model;
  Json manifest;
};

void save_bundle(const std::filesystem::path& dir, const FairFit& fit, const DataTable& data,
                 const Weights& w, const DomainInterval& omega, const FairConfig& cfg,
                 const Json& resolved_config);
Bundle load_bundle(const std::filesystem::path& dir);

/// SHA-256 of the fit-time pushforward samples, group by group in map-half order.
std::string pushforward_hash(const std::vector<std::vector<double>>& per_group);

}  // namespace fairbary
