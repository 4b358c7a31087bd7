#include "fairbary/maps.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fairbary/error.hpp"
#include "fairbary/log.hpp"

namespace fairbary {

namespace {

constexpr double kSlopeRelTol = 1e-9;
constexpr double kCongruencyTol = 1e-10;

bool slope_in_box(double slope, const LipschitzBound& lip) {
  return slope >= lip.min_slope() * (1.0 - kSlopeRelTol) &&
         slope <= lip.max_slope() * (1.0 + kSlopeRelTol);
}

}  // namespace

LipschitzBound::LipschitzBound(double value) : L(value) {
  if (!(value > 1.0) || !std::isfinite(value)) {
    throw InfeasibleError(fmt::format("Lipschitz bound must satisfy L > 1, got {}", value));
  }
}

KnotGrid::KnotGrid(const DomainInterval& omega, int level) : omega_(omega), level_(level) {
  if (level < 0 || level > 24) throw ConfigError(fmt::format("sieve level {} out of range", level));
  const std::size_t k = std::size_t{1} << level;
  spacing_ = omega.width() / static_cast<double>(k);
  knots_.resize(k + 1);
  for (std::size_t i = 0; i <= k; ++i) {
    knots_[i] = omega.lo + static_cast<double>(i) * spacing_;
  }
  knots_.back() = omega.hi;
}

MonotoneMap::MonotoneMap(std::vector<double> knots, std::vector<double> values,
                         LipschitzBound lip)
    : knots_(std::move(knots)), values_(std::move(values)), lip_(lip) {
  if (knots_.size() < 2 || knots_.size() != values_.size()) {
    throw DomainError("monotone map needs at least two knots and matching values");
  }
  for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
    if (!(knots_[k + 1] > knots_[k])) {
      throw DomainError(fmt::format("monotone map knots not strictly increasing at {}", k));
    }
    const double s = slope(k);
    if (!slope_in_box(s, lip_)) {
      throw DomainError(fmt::format("slope {} on interval {} outside [{}, {}]", s, k,
                                    lip_.min_slope(), lip_.max_slope()));
    }
  }
}

MonotoneMap MonotoneMap::identity(const DomainInterval& omega, LipschitzBound lip) {
  return MonotoneMap({omega.lo, omega.hi}, {omega.lo, omega.hi}, lip);
}

MonotoneMap MonotoneMap::translation(const DomainInterval& omega, double shift,
                                     LipschitzBound lip) {
  return MonotoneMap({omega.lo, omega.hi}, {omega.lo + shift, omega.hi + shift}, lip);
}

MonotoneMap MonotoneMap::affine(const DomainInterval& omega, double slope, double intercept,
                                LipschitzBound lip) {
  return MonotoneMap({omega.lo, omega.hi},
                     {slope * omega.lo + intercept, slope * omega.hi + intercept}, lip);
}

double MonotoneMap::slope(std::size_t k) const {
  return (values_[k + 1] - values_[k]) / (knots_[k + 1] - knots_[k]);
}

std::size_t MonotoneMap::locate(double z) const {
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), z);
  const auto idx = static_cast<std::size_t>(it - knots_.begin());
  if (idx == 0) return 0;
  return std::min(idx - 1, knots_.size() - 2);
}

double MonotoneMap::eval(double z) const {
  if (z <= knots_.front()) return z + c_inf();
  if (z >= knots_.back()) return z + c_sup();
  const auto k = locate(z);
  const double t = (z - knots_[k]) / (knots_[k + 1] - knots_[k]);
  return values_[k] + t * (values_[k + 1] - values_[k]);
}

MonotoneMap MonotoneMap::inverse() const { return MonotoneMap(values_, knots_, lip_); }

bool operator==(const MonotoneMap& a, const MonotoneMap& b) {
  return a.knots().size() == b.knots().size() &&
         std::equal(a.knots().begin(), a.knots().end(), b.knots().begin()) &&
         std::equal(a.values().begin(), a.values().end(), b.values().begin()) &&
         a.lipschitz().L == b.lipschitz().L;
}

MonotoneMap invert(const MonotoneMap& map) { return map.inverse(); }

double CongruentFamily::knot_residual() const {
  const auto knots = grid_.knots();
  double worst = 0.0;
  for (std::size_t k = 0; k < knots.size(); ++k) {
    double acc = 0.0;
    for (std::size_t s = 0; s < inverse_.size(); ++s) acc += weights_[s] * inverse_[s].values()[k];
    worst = std::max(worst, std::abs(acc - knots[k]));
  }
  return worst;
}

double CongruentFamily::dense_residual(std::size_t points) const {
  const auto& omega = grid_.domain();
  const double lo = omega.lo - omega.width();
  const double hi = omega.hi + omega.width();
  double worst = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double z = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    double acc = 0.0;
    for (std::size_t s = 0; s < inverse_.size(); ++s) acc += weights_[s] * inverse_[s].eval(z);
    worst = std::max(worst, std::abs(acc - z));
  }
  return worst;
}

CongruentFamily CongruentFamily::permuted(std::span<const std::size_t> order) const {
  if (order.size() != size()) throw DomainError("permutation size mismatch");
  CongruentFamily out;
  out.grid_ = grid_;
  out.lip_ = lip_;
  out.weights_ = weights_.permuted(order);
  for (auto i : order) {
    out.inverse_.push_back(inverse_.at(i));
    out.forward_.push_back(forward_.at(i));
  }
  return out;
}

CongruentFamily CongruentFamily::build(std::vector<std::vector<double>> rows, const KnotGrid& grid,
                             const Weights& w, LipschitzBound lip) {
  const auto m = w.size();
  const auto knots = grid.knots();
  for (std::size_t s = 0; s < m; ++s) {
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
      const double slope = (rows[s][k + 1] - rows[s][k]) / (knots[k + 1] - knots[k]);
      if (!slope_in_box(slope, lip)) {
        throw InfeasibleError(fmt::format(
            "inverse {}{} has slope {} on knot interval [{}, {}], outside [{}, {}]", s,
            s + 1 == m ? " (induced by congruency)" : "", slope, knots[k], knots[k + 1],
            lip.min_slope(), lip.max_slope()));
      }
    }
  }

  CongruentFamily family;
  family.grid_ = grid;
  family.weights_ = w;
  family.lip_ = lip;
  for (auto& row : rows) {
    MonotoneMap inv(std::vector<double>(knots.begin(), knots.end()), std::move(row), lip);
    family.forward_.push_back(inv.inverse());
    family.inverse_.push_back(std::move(inv));
  }
  return family;
}

CongruentFamily make_congruent(std::span<const std::vector<double>> inverse_values,
                               const KnotGrid& grid, const Weights& w, LipschitzBound lip) {
  const auto m = w.size();
  const auto knots = grid.knots();
  if (inverse_values.size() + 1 != m) {
    throw DomainError(fmt::format("expected {} inverse rows for {} groups, got {}", m - 1, m,
                                  inverse_values.size()));
  }
  std::vector<std::vector<double>> rows(inverse_values.begin(), inverse_values.end());
  std::vector<double> last(knots.size());
  for (std::size_t k = 0; k < knots.size(); ++k) {
    double acc = 0.0;
    for (std::size_t s = 0; s + 1 < m; ++s) {
      if (rows[s].size() != knots.size()) {
        throw DomainError(fmt::format("inverse row {} has {} values, grid has {} knots", s,
                                      rows[s].size(), knots.size()));
      }
      acc += w[s] * rows[s][k];
    }
    last[k] = (knots[k] - acc) / w[m - 1];
  }
  rows.push_back(std::move(last));

  return CongruentFamily::build(std::move(rows), grid, w, lip);
}

CongruentFamily assemble_family(std::span<const std::vector<double>> inverse_values,
                                const KnotGrid& grid, const Weights& w, LipschitzBound lip) {
  const auto knots = grid.knots();
  if (inverse_values.size() != w.size()) {
    throw DomainError(fmt::format("expected {} inverse rows, got {}", w.size(), inverse_values.size()));
  }
  for (std::size_t k = 0; k < knots.size(); ++k) {
    double acc = 0.0;
    for (std::size_t s = 0; s < w.size(); ++s) {
      if (inverse_values[s].size() != knots.size()) {
        throw DomainError(fmt::format("inverse row {} has {} values, grid has {} knots", s,
                                      inverse_values[s].size(), knots.size()));
      }
      acc += w[s] * inverse_values[s][k];
    }
    if (std::abs(acc - knots[k]) > kCongruencyTol) {
      throw DomainError(fmt::format("congruency residual {} at knot {} exceeds {}",
                                    std::abs(acc - knots[k]), knots[k], kCongruencyTol));
    }
  }
  return CongruentFamily::build(std::vector<std::vector<double>>(inverse_values.begin(), inverse_values.end()),
                      grid, w, lip);
}

CongruentFamily identity_family(const KnotGrid& grid, const Weights& w, LipschitzBound lip) {
  const auto knots = grid.knots();
  std::vector<std::vector<double>> rows(w.size() - 1,
                                        std::vector<double>(knots.begin(), knots.end()));
  return make_congruent(rows, grid, w, lip);
}

int sieve_level(double n_tilde, double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta >= 0.0)) {
    throw ConfigError(fmt::format("sieve complexity needs alpha > 0 and beta >= 0, got ({}, {})",
                                  alpha, beta));
  }
  if (!(n_tilde > std::exp(1.0))) {
    log::warn("effective sample size {} <= e; using sieve level 0", n_tilde);
    return 0;
  }
  const double target = std::pow(n_tilde / std::log(n_tilde), 1.0 / (alpha + beta));
  if (target < 1.0) return 0;
  int j = static_cast<int>(std::floor(std::log2(target)));
  // Guard the floor against rounding at exact powers of two.
  while (j > 0 && std::ldexp(1.0, j) > target) --j;
  while (std::ldexp(1.0, j + 1) <= target) ++j;
  return std::max(j, 0);
}

}  // namespace fairbary
