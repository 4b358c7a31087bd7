#include "fairbary/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>

#include <fmt/format.h>

#include "fairbary/error.hpp"
#include "fairbary/fingerprint.hpp"
#include "fairbary/log.hpp"

namespace fairbary {

SieveSpec::SieveSpec(const DomainInterval& omega, int level_, LipschitzBound lip_, double alpha_,
                     double beta_)
    : level(level_), grid(omega, level_), lip(lip_), alpha(alpha_), beta(beta_) {
  if (!(alpha > 0.0) || !(beta >= 0.0)) {
    throw ConfigError(fmt::format("sieve needs alpha > 0 and beta >= 0, got ({}, {})", alpha, beta));
  }
}

void SolverConfig::validate() const {
  if (max_iters < 1) throw ConfigError("solver max_iters must be at least 1");
  if (!(tol_rel_obj > 0.0)) throw ConfigError("solver tol_rel_obj must be positive");
  if (!(step_scale > 0.0) || !std::isfinite(step_scale)) {
    throw ConfigError("solver step_scale must be positive and finite");
  }
  if (window < 1) throw ConfigError("solver window must be at least 1");
}

EmpiricalObjective::EmpiricalObjective(std::span<const EmpiricalMeasure> ms, const Weights& w,
                                       const KnotGrid& grid, Exec exec)
    : ms_(ms.begin(), ms.end()),
      w_(w),
      grid_(grid),
      base_(grid.domain().base_point()),
      exec_(exec) {
  if (ms_.size() != w_.size()) {
    throw DomainError(fmt::format("{} samples for {} weights", ms_.size(), w_.size()));
  }
  for (std::size_t s = 0; s < ms_.size(); ++s) {
    if (ms_[s].size() == 0) throw DomainError(fmt::format("group {} sample is empty", s));
  }
}

std::vector<double> EmpiricalObjective::induced_row(
    std::span<const std::vector<double>> free_rows) const {
  const auto z = grid_.knots();
  const std::size_t m = w_.size();
  std::vector<double> last(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    double acc = 0.0;
    for (std::size_t s = 0; s + 1 < m; ++s) acc += w_[s] * free_rows[s][k];
    last[k] = (z[k] - acc) / w_[m - 1];
  }
  return last;
}

EmpiricalObjective::Evaluation EmpiricalObjective::evaluate(
    std::span<const std::vector<double>> free_rows) const {
  const std::size_t m = w_.size();
  if (free_rows.size() + 1 != m) throw DomainError("wrong number of free inverse rows");
  const auto z = grid_.knots();
  const std::vector<double> last = induced_row(free_rows);

  Evaluation out;
  out.per_group.resize(m);
  std::vector<std::vector<double>> group_grad(m);
  for (std::size_t s = 0; s < m; ++s) {
    const std::span<const double> row = s + 1 < m ? std::span<const double>(free_rows[s])
                                                   : std::span<const double>(last);
    const auto pot = PotentialPair::from_inverse(z, row, base_);
    auto sums = potential_sums(pot, ms_[s].points(), exec_);
    out.per_group[s] = sums.mean_u;
    out.value += w_[s] * sums.mean_u;
    group_grad[s] = std::move(sums.grad);
  }
  out.grad.assign(m - 1, std::vector<double>(z.size(), 0.0));
  for (std::size_t s = 0; s + 1 < m; ++s) {
    for (std::size_t k = 0; k < z.size(); ++k) {
      out.grad[s][k] = w_[s] * (group_grad[s][k] - group_grad[m - 1][k]);
    }
  }
  return out;
}

double EmpiricalObjective::value(std::span<const std::vector<double>> free_rows) const {
  return evaluate(free_rows).value;
}

void project_increments(std::span<double> d, std::span<const double> wf, double w_last, double h,
                        const LipschitzBound& lip) {
  const std::size_t n = d.size();
  const double lo = h * lip.min_slope();
  const double hi = h * lip.max_slope();
  const double sum_lo = h * (1.0 - w_last * lip.max_slope());
  const double sum_hi = h * (1.0 - w_last * lip.min_slope());

  auto weighted = [&](double lambda) {
    double acc = 0.0;
    for (std::size_t s = 0; s < n; ++s) acc += wf[s] * std::clamp(d[s] - lambda * wf[s], lo, hi);
    return acc;
  };

  double target;
  const double at_zero = weighted(0.0);
  if (at_zero > sum_hi) {
    target = sum_hi;
  } else if (at_zero < sum_lo) {
    target = sum_lo;
  } else {
    for (std::size_t s = 0; s < n; ++s) d[s] = std::clamp(d[s], lo, hi);
    return;
  }

  // weighted(lambda) is piecewise linear and nonincreasing; breakpoints are
  // where a coordinate hits a bound.
  std::vector<double> breaks;
  breaks.reserve(2 * n + 1);
  breaks.push_back(0.0);
  for (std::size_t s = 0; s < n; ++s) {
    breaks.push_back((d[s] - lo) / wf[s]);
    breaks.push_back((d[s] - hi) / wf[s]);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  double a = breaks.front(), b = breaks.back();
  double fa = weighted(a), fb = weighted(b);
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double f0 = weighted(breaks[i]);
    const double f1 = weighted(breaks[i + 1]);
    if (f0 >= target && f1 <= target) {
      a = breaks[i];
      b = breaks[i + 1];
      fa = f0;
      fb = f1;
      break;
    }
  }
  const double lambda = fa == fb ? a : a + (fa - target) * (b - a) / (fa - fb);
  for (std::size_t s = 0; s < n; ++s) d[s] = std::clamp(d[s] - lambda * wf[s], lo, hi);
}

namespace {

// Parameters per free group: one level (value at the first knot) followed by
// K increments. Flattened group-major.
class Chart {
 public:
  Chart(std::size_t free_groups, std::size_t intervals)
      : groups_(free_groups), k_(intervals) {}

  std::size_t size() const { return groups_ * (k_ + 1); }
  double& level(std::vector<double>& p, std::size_t s) const { return p[s * (k_ + 1)]; }
  double& inc(std::vector<double>& p, std::size_t s, std::size_t k) const {
    return p[s * (k_ + 1) + 1 + k];
  }
  double inc(const std::vector<double>& p, std::size_t s, std::size_t k) const {
    return p[s * (k_ + 1) + 1 + k];
  }

  std::vector<std::vector<double>> rows(const std::vector<double>& p) const {
    std::vector<std::vector<double>> out(groups_, std::vector<double>(k_ + 1));
    for (std::size_t s = 0; s < groups_; ++s) {
      double v = p[s * (k_ + 1)];
      out[s][0] = v;
      for (std::size_t k = 0; k < k_; ++k) {
        v += inc(p, s, k);
        out[s][k + 1] = v;
      }
    }
    return out;
  }

  std::vector<double> from_rows(std::span<const std::vector<double>> rows) const {
    std::vector<double> p(size());
    for (std::size_t s = 0; s < groups_; ++s) {
      level(p, s) = rows[s][0];
      for (std::size_t k = 0; k < k_; ++k) inc(p, s, k) = rows[s][k + 1] - rows[s][k];
    }
    return p;
  }

  // Chain rule from knot-value gradients to (level, increments).
  std::vector<double> pull_back(const std::vector<std::vector<double>>& grad) const {
    std::vector<double> g(size());
    for (std::size_t s = 0; s < groups_; ++s) {
      double tail = 0.0;
      for (std::size_t k = k_; k-- > 0;) {
        tail += grad[s][k + 1];
        inc(g, s, k) = tail;
      }
      level(g, s) = tail + grad[s][0];
    }
    return g;
  }

  void project(std::vector<double>& p, std::span<const double> wf, double w_last, double h,
               const LipschitzBound& lip) const {
    std::vector<double> col(groups_);
    for (std::size_t k = 0; k < k_; ++k) {
      for (std::size_t s = 0; s < groups_; ++s) col[s] = inc(p, s, k);
      project_increments(col, wf, w_last, h, lip);
      for (std::size_t s = 0; s < groups_; ++s) inc(p, s, k) = col[s];
    }
  }

 private:
  std::size_t groups_;
  std::size_t k_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

// Canonical processing order of the groups, independent of their labels.
std::vector<std::size_t> canonical_order(std::span<const EmpiricalMeasure> ms, const Weights& w) {
  std::vector<std::tuple<double, std::size_t, std::string>> keys;
  keys.reserve(ms.size());
  for (std::size_t s = 0; s < ms.size(); ++s) {
    keys.emplace_back(w[s], ms[s].size(), fingerprint(ms[s].points()));
  }
  std::vector<std::size_t> order(ms.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return order;
}

struct SolveResult {
  std::vector<double> params;
  std::vector<double> trace;
  std::size_t iterations = 0;
  bool converged = false;
  double objective = 0.0;
};

class Solver {
 public:
  Solver(const EmpiricalObjective& obj, const Chart& chart, const Weights& w, const SieveSpec& spec,
         const SolverConfig& cfg)
      : obj_(obj), chart_(chart), spec_(spec), cfg_(cfg) {
    const std::size_t m = w.size();
    for (std::size_t s = 0; s + 1 < m; ++s) wf_.push_back(w[s]);
    w_last_ = w[m - 1];
  }

  SolveResult run(std::vector<double> start) {
    return cfg_.step_rule == StepRule::kConstant ? accelerated(std::move(start))
                                                 : diminishing(std::move(start));
  }

 private:
  struct Point {
    std::vector<double> p;
    double f = 0.0;
    std::vector<double> g;
  };

  Point at(std::vector<double> p) const {
    const auto rows = chart_.rows(p);
    auto ev = obj_.evaluate(rows);
    return {std::move(p), ev.value, chart_.pull_back(ev.grad)};
  }

  std::vector<double> step_from(const Point& y, double t) const {
    std::vector<double> x(y.p.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = y.p[i] - t * y.g[i];
    chart_.project(x, wf_, w_last_, spec_.grid.spacing(), spec_.lip);
    return x;
  }

  // Projected step from y with backtracking on the quadratic upper model.
  Point backtrack(const Point& y, double& t) const {
    for (int tries = 0; tries < 60; ++tries) {
      Point x = at(step_from(y, t));
      std::vector<double> diff(x.p.size());
      for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = x.p[i] - y.p[i];
      const double model = y.f + dot(y.g, diff) + dot(diff, diff) / (2.0 * t);
      if (x.f <= model + 1e-14 * std::max(1.0, std::abs(y.f))) return x;
      t *= 0.5;
    }
    return at(step_from(y, t));
  }

  bool record(SolveResult& res, const Point& x, std::vector<double>& best_p, double& best_f) {
    if (x.f <= best_f) {
      best_f = x.f;
      best_p = x.p;
    }
    res.trace.push_back(best_f);
    const std::size_t it = res.trace.size();
    if (it > cfg_.window) {
      const double drop = res.trace[it - 1 - cfg_.window] - best_f;
      if (drop <= cfg_.tol_rel_obj * std::max(1.0, std::abs(best_f))) return true;
    }
    return false;
  }

  SolveResult accelerated(std::vector<double> start) {
    SolveResult res;
    Point x = at(std::move(start));
    Point y = x;
    std::vector<double> best_p = x.p;
    double best_f = x.f;
    double t = cfg_.step_scale;
    double momentum = 1.0;
    for (std::size_t it = 0; it < cfg_.max_iters; ++it) {
      Point next = backtrack(y, t);
      res.iterations = it + 1;
      if (next.f > x.f) {
        // Adaptive restart: drop momentum and retry from the current iterate.
        momentum = 1.0;
        y = x;
        if (record(res, x, best_p, best_f)) {
          res.converged = true;
          break;
        }
        continue;
      }
      const double momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      const double beta = (momentum - 1.0) / momentum_next;
      std::vector<double> yp(next.p.size());
      for (std::size_t i = 0; i < yp.size(); ++i) yp[i] = next.p[i] + beta * (next.p[i] - x.p[i]);
      chart_.project(yp, wf_, w_last_, spec_.grid.spacing(), spec_.lip);
      momentum = momentum_next;
      x = std::move(next);
      y = beta == 0.0 ? x : at(std::move(yp));
      if (record(res, x, best_p, best_f)) {
        res.converged = true;
        break;
      }
    }
    res.params = std::move(best_p);
    res.objective = best_f;
    return res;
  }

  SolveResult diminishing(std::vector<double> start) {
    SolveResult res;
    Point x = at(std::move(start));
    std::vector<double> best_p = x.p;
    double best_f = x.f;
    // Base step from one backtracking pass at the start point.
    double t0 = cfg_.step_scale;
    (void)backtrack(x, t0);
    std::vector<double> avg(x.p.size(), 0.0);
    double weight_sum = 0.0;
    for (std::size_t it = 0; it < cfg_.max_iters; ++it) {
      const double t = t0 / std::sqrt(static_cast<double>(it + 1));
      Point next = at(step_from(x, t));
      weight_sum += t;
      for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += t * (next.p[i] - avg[i]) / weight_sum;
      x = std::move(next);
      res.iterations = it + 1;
      bool stop = record(res, x, best_p, best_f);
      if (stop || it + 1 == cfg_.max_iters) {
        const Point mean = at(avg);
        if (mean.f <= best_f) {
          best_f = mean.f;
          best_p = mean.p;
          res.trace.back() = best_f;
        }
        res.converged = stop;
        break;
      }
    }
    res.params = std::move(best_p);
    res.objective = best_f;
    return res;
  }

  const EmpiricalObjective& obj_;
  const Chart& chart_;
  const SieveSpec& spec_;
  const SolverConfig& cfg_;
  std::vector<double> wf_;
  double w_last_ = 0.0;
};

}  // namespace

FitReport fit_maps(std::span<const EmpiricalMeasure> ms, const Weights& w, const SieveSpec& spec,
                   const SolverConfig& cfg) {
  cfg.validate();
  const std::size_t m = w.size();
  if (ms.size() != m) {
    throw DomainError(fmt::format("{} samples for {} weights", ms.size(), m));
  }
  for (std::size_t s = 0; s < m; ++s) {
    if (ms[s].size() < 2) {
      throw DomainError(fmt::format("group {} needs at least 2 points, has {}", s, ms[s].size()));
    }
  }

  const auto order = canonical_order(ms, w);
  std::vector<EmpiricalMeasure> sorted;
  sorted.reserve(m);
  for (auto i : order) sorted.push_back(ms[i]);
  const Weights ws = w.permuted(order);

  // The identity family is the start point and certifies feasibility.
  const CongruentFamily start = identity_family(spec.grid, ws, spec.lip);
  const Chart chart(m - 1, spec.grid.intervals());
  std::vector<std::vector<double>> rows;
  for (std::size_t s = 0; s + 1 < m; ++s) {
    const auto v = start.inverse_values(s);
    rows.emplace_back(v.begin(), v.end());
  }

  const EmpiricalObjective objective(sorted, ws, spec.grid, Exec::kParallel);
  Solver solver(objective, chart, ws, spec, cfg);
  SolveResult res = solver.run(chart.from_rows(rows));

  const auto best_rows = chart.rows(res.params);
  CongruentFamily fitted = make_congruent(best_rows, spec.grid, ws, spec.lip);

  std::vector<std::size_t> inverse_order(m);
  for (std::size_t i = 0; i < m; ++i) inverse_order[order[i]] = i;

  FitReport report;
  report.family = fitted.permuted(inverse_order);
  report.objective_trace = std::move(res.trace);
  report.iterations_used = res.iterations;
  report.converged = res.converged;
  report.congruency_residual = report.family.knot_residual();
  report.objective = res.objective;
  if (!report.converged) {
    log::warn("map solver stopped after {} iterations without meeting tolerance {}",
              report.iterations_used, cfg.tol_rel_obj);
  }
  return report;
}

double effective_sample_size(std::span<const std::size_t> counts, const Weights& w) {
  if (counts.size() != w.size()) throw DomainError("group counts and weights differ in size");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < counts.size(); ++s) {
    if (counts[s] < 1) throw DomainError(fmt::format("group {} is empty", s));
    best = std::min(best, static_cast<double>(counts[s]) / w[s]);
  }
  return best;
}

int select_level(std::span<const EmpiricalMeasure> ms, const Weights& w, double alpha,
                 double beta) {
  std::vector<std::size_t> counts;
  for (const auto& m : ms) counts.push_back(m.size());
  return sieve_level(effective_sample_size(counts, w), alpha, beta);
}

namespace {

double weighted_band_error(std::span<const MonotoneMap> family, std::span<const MonotoneMap> oracle,
                           std::span<const EmpiricalMeasure> ms, const Weights& w, double lo_q,
                           double hi_q) {
  if (family.size() != oracle.size() || family.size() != ms.size() || ms.size() != w.size()) {
    throw DomainError("map error needs families, samples and weights of matching size");
  }
  double total = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) {
    const auto pts = ms[s].points();
    if (pts.empty()) throw DomainError(fmt::format("group {} sample is empty", s));
    const double a = lo_q > 0.0 ? ms[s].quantile(lo_q) : -std::numeric_limits<double>::infinity();
    const double b = hi_q < 1.0 ? ms[s].quantile(hi_q) : std::numeric_limits<double>::infinity();
    double acc = 0.0;
    std::size_t used = 0;
    for (double z : pts) {
      if (z < a || z > b) continue;
      const double d = family[s].eval(z) - oracle[s].eval(z);
      acc += d * d;
      ++used;
    }
    if (used > 0) total += w[s] * acc / static_cast<double>(used);
  }
  return total;
}

}  // namespace

double map_error(std::span<const MonotoneMap> family, std::span<const MonotoneMap> oracle,
                 std::span<const EmpiricalMeasure> ms, const Weights& w) {
  return weighted_band_error(family, oracle, ms, w, 0.0, 1.0);
}

double map_error_central(std::span<const MonotoneMap> family, std::span<const MonotoneMap> oracle,
                         std::span<const EmpiricalMeasure> ms, const Weights& w, double lo_q,
                         double hi_q) {
  if (!(lo_q >= 0.0 && lo_q < hi_q && hi_q <= 1.0)) {
    throw DomainError(fmt::format("quantile band [{}, {}] is invalid", lo_q, hi_q));
  }
  return weighted_band_error(family, oracle, ms, w, lo_q, hi_q);
}

}  // namespace fairbary
