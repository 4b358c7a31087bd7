#include "fairbary/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "fairbary/error.hpp"
#include "fairbary/estimator.hpp"
#include "fairbary/fingerprint.hpp"
#include "fairbary/log.hpp"
#include "fairbary/serialize.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fairbary {

void SweepGrid::validate() const {
  if (n_values.empty()) throw ConfigError("sweep needs at least one sample size");
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (n_values[i] < 4) throw ConfigError("sweep sample sizes must be at least 4");
    if (i > 0 && n_values[i] <= n_values[i - 1]) {
      throw ConfigError("sweep sample sizes must be strictly increasing");
    }
  }
  if (replicates < 1) throw ConfigError("sweep needs at least one replicate");
  scenario.validate();
}

CellResult run_cell(const ScenarioSpec& scenario, std::size_t n, std::size_t replicate,
                    std::uint64_t seed, const SweepOptions& opts) {
  CellResult cell;
  cell.n = n;
  cell.replicate = replicate;
  cell.seed = seed;

  ScenarioSpec spec = scenario;
  spec.seed = seed;
  const std::size_t m = spec.groups();
  const std::vector<std::size_t> sizes(m, n);
  const Generated data = generate(spec, sizes);

  FairConfig fc = opts.fit;
  fc.solver.seed = seed;
  const FairFit fit = fit_fair(data.samples, spec.w, spec.omega, fc);
  cell.level = fit.sieve.level;
  cell.iterations = fit.report.iterations_used;
  cell.converged = fit.report.converged;
  cell.knot_residual = fit.report.family.knot_residual();
  cell.dense_residual = fit.report.family.dense_residual();

  EvalSpec ev = opts.eval;
  ev.mode = EvalMode::kEmpirical;
  ev.seed = derive_seed(seed, 0xE7A1ULL);
  const auto features = evaluation_features(spec, ev);

  std::vector<EmpiricalMeasure> base_laws, fair_laws;
  double truth_var = 0.0;
  for (std::size_t s = 0; s < m; ++s) {
    const auto base = fit.model.base(s).predict_batch(features[s]);
    const auto& map = fit.model.maps().map(s);
    const std::size_t rows = base.size();
    std::vector<double> fair(rows);
    double sum = 0.0, sum_sq = 0.0, base_acc = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const double x = features[s].row(i)[0];
      fair[i] = map.eval(base[i]);
      const double d = fair[i] - fair_bayes(spec, data.truth, s, x);
      sum += d * d;
      sum_sq += d * d * d * d;
      const double e = base[i] - spec.f_star(s, x);
      base_acc += e * e;
    }
    const double rd = static_cast<double>(rows);
    const double mean = sum / rd;
    cell.truth_error += spec.w[s] * mean;
    cell.base_error += spec.w[s] * base_acc / rd;
    truth_var += spec.w[s] * spec.w[s] * std::max(0.0, sum_sq / rd - mean * mean) / rd;
    base_laws.emplace_back(base);
    fair_laws.emplace_back(std::move(fair));
  }
  cell.truth_error_se = std::sqrt(truth_var);

  const auto bary = barycenter_oracle(base_laws, spec.w);
  const KnotGrid oracle_grid(spec.omega, opts.oracle_level);
  std::vector<MonotoneMap> oracle;
  for (const auto& law : base_laws) oracle.push_back(oracle_map(law, bary, oracle_grid, fc.lip));

  cell.map_error = map_error(fit.model.maps().maps(), oracle, base_laws, spec.w);
  cell.unfairness_ub = minimax_center_upper_bound(fair_laws, spec.w);
  cell.fairness = check_fairness_bound(fit.model, oracle, base_laws, spec.w,
                                       default_grid_slack(oracle_grid));
  cell.ok = true;
  return cell;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("slope needs paired values");
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DomainError("log-log slope needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

SweepResult run_sweep(const SweepGrid& grid, const SweepOptions& opts) {
  grid.validate();
  SweepResult result;
  const std::size_t reps = grid.replicates;
  const std::size_t total = grid.n_values.size() * reps;
  result.cells.resize(total);

  int threads = opts.threads;
#ifdef _OPENMP
  if (threads <= 0) threads = omp_get_max_threads();
#else
  threads = 1;
#endif

#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(total); ++c) {
    const auto idx = static_cast<std::size_t>(c);
    const std::size_t n = grid.n_values[idx / reps];
    const std::size_t rep = idx % reps;
    const std::uint64_t seed = derive_seed(derive_seed(opts.seed, n), rep);
    CellResult cell;
    try {
      cell = run_cell(grid.scenario, n, rep, seed, opts);
    } catch (const std::exception& e) {
      cell = CellResult{};
      cell.n = n;
      cell.replicate = rep;
      cell.seed = seed;
      cell.ok = false;
      cell.error = e.what();
    }
    result.cells[idx] = std::move(cell);
  }

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < grid.n_values.size(); ++i) {
    SweepSummaryRow row;
    row.n = grid.n_values[i];
    std::vector<double> me, te, ub;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto& cell = result.cells[i * reps + r];
      if (!cell.ok) continue;
      me.push_back(cell.map_error);
      te.push_back(cell.truth_error);
      ub.push_back(cell.unfairness_ub);
    }
    row.ok_cells = me.size();
    row.median_map_error = median(me);
    row.median_truth_error = median(te);
    row.median_unfairness_ub = median(ub);
    if (row.ok_cells > 0 && row.median_map_error > 0.0) {
      xs.push_back(static_cast<double>(row.n));
      ys.push_back(row.median_map_error);
    }
    result.summary.push_back(row);
  }
  result.fitted_slope = loglog_slope(xs, ys);
  const auto& fc = opts.fit;
  result.theoretical_slope = -fc.alpha / (fc.alpha + fc.beta);
  for (const auto& cell : result.cells) result.failures += cell.ok ? 0 : 1;
  result.within_budget =
      static_cast<double>(result.failures) <= opts.failure_budget * static_cast<double>(total);
  return result;
}

namespace {

std::string num(double v) { return std::isfinite(v) ? fmt::format("{}", v) : "NA"; }

}  // namespace

std::string render_svg(const SweepResult& result) {
  const double width = 640, height = 420, left = 70, right = 20, top = 30, bottom = 50;
  std::vector<std::pair<double, double>> pts;
  for (const auto& row : result.summary) {
    if (row.ok_cells > 0 && row.median_map_error > 0.0) {
      pts.emplace_back(std::log10(static_cast<double>(row.n)), std::log10(row.median_map_error));
    }
  }
  std::ostringstream os;
  os << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\">\n",
      width, height, width, height);
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (pts.empty()) {
    os << "<text x=\"20\" y=\"40\" font-family=\"sans-serif\" font-size=\"14\">no successful "
          "cells</text>\n</svg>\n";
    return os.str();
  }
  double x0 = pts.front().first, x1 = pts.front().first;
  double y0 = pts.front().second, y1 = pts.front().second;
  for (const auto& [x, y] : pts) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  if (x1 - x0 < 1e-9) {
    x0 -= 0.5;
    x1 += 0.5;
  }
  // Leave room for the theoretical line.
  const double span = std::max(y1 - y0, std::abs(result.theoretical_slope) * (x1 - x0));
  const double ymid = 0.5 * (y0 + y1);
  y0 = ymid - 0.6 * span - 0.1;
  y1 = ymid + 0.6 * span + 0.1;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (width - left - right); };
  auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * (height - top - bottom); };

  os << fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", left,
                    height - bottom, width - right, height - bottom);
  os << fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n", left, top,
                    left, height - bottom);
  for (const auto& row : result.summary) {
    const double x = std::log10(static_cast<double>(row.n));
    os << fmt::format(
        "<text x=\"{:.1f}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" "
        "text-anchor=\"middle\">{}</text>\n",
        px(x), height - bottom + 16, row.n);
  }
  for (int e = static_cast<int>(std::ceil(y0)); e <= static_cast<int>(std::floor(y1)); ++e) {
    os << fmt::format(
        "<text x=\"{}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
        "text-anchor=\"end\">1e{}</text>\n",
        left - 6, py(e) + 4, e);
  }
  os << fmt::format(
      "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" "
      "text-anchor=\"middle\">n per group (log scale)</text>\n",
      0.5 * (left + width - right), height - 12);
  os << fmt::format(
      "<text x=\"14\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" "
      "transform=\"rotate(-90 14 {})\">median map error</text>\n",
      0.5 * (top + height - bottom), 0.5 * (top + height - bottom));

  double cx = 0.0, cy = 0.0;
  for (const auto& [x, y] : pts) {
    cx += x;
    cy += y;
  }
  cx /= static_cast<double>(pts.size());
  cy /= static_cast<double>(pts.size());
  auto line = [&](double slope, const char* color, const char* dash) {
    os << fmt::format(
        "<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" "
        "stroke-dasharray=\"{}\"/>\n",
        px(x0), py(cy + slope * (x0 - cx)), px(x1), py(cy + slope * (x1 - cx)), color, dash);
  };
  if (std::isfinite(result.fitted_slope)) line(result.fitted_slope, "steelblue", "none");
  line(result.theoretical_slope, "firebrick", "6,4");
  for (const auto& [x, y] : pts) {
    os << fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"black\"/>\n", px(x),
                      py(y));
  }
  os << fmt::format(
      "<text x=\"{}\" y=\"18\" font-family=\"sans-serif\" font-size=\"12\">fitted slope {} "
      "(solid), theoretical {} (dashed)</text>\n",
      left, num(result.fitted_slope), num(result.theoretical_slope));
  os << "</svg>\n";
  return os.str();
}

void write_sweep(const std::filesystem::path& dir, const SweepResult& result, const SweepGrid& grid,
                 const SweepOptions& opts) {
  std::ostringstream rates, cells, summary;
  rates << "n,replicate,map_error,truth_error,unfairness_ub,seed\n";
  cells << "n,replicate,status,level,iterations,converged,base_error,truth_error_se,"
           "fairness_lhs,fairness_rhs,fairness_pass,knot_residual,dense_residual,error\n";
  for (const auto& c : result.cells) {
    if (c.ok) {
      rates << fmt::format("{},{},{},{},{},{}\n", c.n, c.replicate, num(c.map_error),
                           num(c.truth_error), num(c.unfairness_ub), c.seed);
      cells << fmt::format("{},{},ok,{},{},{},{},{},{},{},{},{},{},\n", c.n, c.replicate, c.level,
                           c.iterations, c.converged ? 1 : 0, num(c.base_error),
                           num(c.truth_error_se), num(c.fairness.lhs), num(c.fairness.rhs),
                           c.fairness.pass ? 1 : 0, num(c.knot_residual), num(c.dense_residual));
    } else {
      std::string msg = c.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      rates << fmt::format("{},{},NA,NA,NA,{}\n", c.n, c.replicate, c.seed);
      cells << fmt::format("{},{},error,,,,,,,,,,,{}\n", c.n, c.replicate, msg);
    }
  }
  summary << "n,ok_cells,median_map_error,median_truth_error,median_unfairness_ub\n";
  for (const auto& r : result.summary) {
    summary << fmt::format("{},{},{},{},{}\n", r.n, r.ok_cells, num(r.median_map_error),
                           num(r.median_truth_error), num(r.median_unfairness_ub));
  }
  Json meta{{"scenario", scenario_to_json(grid.scenario)},
            {"n_values", grid.n_values},
            {"replicates", grid.replicates},
            {"master_seed", opts.seed},
            {"alpha", opts.fit.alpha},
            {"beta", opts.fit.beta},
            {"L", opts.fit.lip.L},
            {"fitted_slope", std::isfinite(result.fitted_slope) ? Json(result.fitted_slope) : Json()},
            {"theoretical_slope", result.theoretical_slope},
            {"failures", result.failures},
            {"failure_budget", opts.failure_budget},
            {"eval_fresh_size", opts.eval.fresh_size(0)},
            {"oracle_level", opts.oracle_level},
            {"w2_convention", "half: W2^2 = inf E[(Z - T(Z))^2 / 2]"},
            {"map_error", "sum_s w_s mean (theta_n,s - theta*_s)^2 over fresh base predictions"},
            {"truth_error", "sum_s w_s mean (fair_s - fair_bayes_s)^2 over fresh features"},
            {"unfairness_ub", "minimax centre bound of the fair pushforwards (half convention)"}};
  write_text_file(dir / "rates.csv", rates.str());
  write_text_file(dir / "rates_cells.csv", cells.str());
  write_text_file(dir / "rates_summary.csv", summary.str());
  write_text_file(dir / "rates_meta.json", dump_json(meta));
  write_text_file(dir / "plot.svg", render_svg(result));
}

}  // namespace fairbary
