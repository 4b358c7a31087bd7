#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fairbary/metrics.hpp"
#include "fairbary/regression.hpp"
#include "fairbary/serialize.hpp"
#include "fairbary/sweep.hpp"
#include "fairbary/synth.hpp"

namespace fairbary::cli {

/// Fully resolved parameters of one command: config file, then flag overrides,
/// then defaults. Validated before any computation.
struct RunConfig {
  std::string command;
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> output;
  std::optional<std::filesystem::path> bundle;
  std::optional<std::filesystem::path> truth;
  std::uint64_t seed = 0;
  std::optional<std::vector<double>> weights;  // defaults to group proportions
  std::optional<DomainInterval> omega;
  FairConfig fit;
  ScenarioSpec scenario;
  std::vector<std::size_t> n;  // per-group sizes for simulate
  EvalSpec eval;
  SweepGrid sweep;
  SweepOptions sweep_options;
  bool quiet = false;

  /// Snapshot that reproduces this run when passed back as --config.
  Json to_json() const;
};

/// Merges `config` (may be empty) with flag overrides already folded into it
/// and resolves every field. Throws ConfigError on unknown keys or bad values.
RunConfig resolve(const std::string& command, const Json& config);

int cmd_simulate(const RunConfig& cfg);
int cmd_fit(const RunConfig& cfg);
int cmd_transform(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg);

/// Entry point; returns the process exit code. Diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& err);

}  // namespace fairbary::cli
