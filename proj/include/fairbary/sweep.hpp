#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fairbary/metrics.hpp"
#include "fairbary/regression.hpp"
#include "fairbary/synth.hpp"

namespace fairbary {

struct SweepGrid {
  std::vector<std::size_t> n_values;  // per-group sample size of each cell
  std::size_t replicates = 20;
  ScenarioSpec scenario;

  void validate() const;
};

struct SweepOptions {
  FairConfig fit;
  EvalSpec eval;
  std::uint64_t seed = 0;
  int threads = 0;              // 0: all available
  double failure_budget = 0.1;  // fraction of cells allowed to fail
  int oracle_level = 10;        // knot level of the fresh-sample oracle maps
};

struct CellResult {
  std::size_t n = 0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;

  double map_error = 0.0;       // d^2 on mu_fhat against the fresh-sample oracle
  double truth_error = 0.0;     // d^2 on mu_X against the fair Bayes-optimal regressor
  double truth_error_se = 0.0;  // Monte-Carlo standard error of truth_error
  double base_error = 0.0;      // sum_s w_s d^2(f_hat_s, f*_s)
  double unfairness_ub = 0.0;   // minimax centre bound of the fair pushforwards
  FairnessCheck fairness;
  int level = 0;
  std::size_t iterations = 0;
  bool converged = false;
  double knot_residual = 0.0;
  double dense_residual = 0.0;
};

/// Fits one synthetic replicate end to end and evaluates it on fresh samples.
CellResult run_cell(const ScenarioSpec& scenario, std::size_t n, std::size_t replicate,
                    std::uint64_t seed, const SweepOptions& opts);

struct SweepSummaryRow {
  std::size_t n = 0;
  std::size_t ok_cells = 0;
  double median_map_error = 0.0;
  double median_truth_error = 0.0;
  double median_unfairness_ub = 0.0;
};

struct SweepResult {
  std::vector<CellResult> cells;  // ordered by (n, replicate)
  std::vector<SweepSummaryRow> summary;
  double fitted_slope = 0.0;      // NaN with fewer than two sample sizes
  double theoretical_slope = 0.0;
  std::size_t failures = 0;
  bool within_budget = true;
};

SweepResult run_sweep(const SweepGrid& grid, const SweepOptions& opts);

/// Least-squares slope of log(y) on log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> values);

/// Writes rates.csv, rates_cells.csv, rates_summary.csv, rates_meta.json and plot.svg.
void write_sweep(const std::filesystem::path& dir, const SweepResult& result, const SweepGrid& grid,
                 const SweepOptions& opts);

std::string render_svg(const SweepResult& result);

}  // namespace fairbary
