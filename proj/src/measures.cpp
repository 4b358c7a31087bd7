#include "fairbary/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "fairbary/error.hpp"
#include "fairbary/maps.hpp"

namespace fairbary {

DomainInterval::DomainInterval(double lo_, double hi_) : lo(lo_), hi(hi_) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    throw DomainError(fmt::format("domain interval requires finite lo < hi, got [{}, {}]", lo, hi));
  }
}

double DomainInterval::clamp(double z) const { return std::clamp(z, lo, hi); }

double DomainInterval::base_point() const { return (lo <= 0.0 && 0.0 <= hi) ? 0.0 : lo; }

Weights::Weights(std::vector<double> w) : w_(std::move(w)) {
  if (w_.size() < 2) throw DomainError("weights need at least two groups");
  double total = 0.0;
  for (double v : w_) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw DomainError(fmt::format("weights must be positive, got {}", v));
    }
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw DomainError(fmt::format("weights must sum to 1, got {}", total));
  }
}

Weights Weights::from_counts(std::span<const std::size_t> counts) {
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  std::vector<double> w;
  w.reserve(counts.size());
  for (auto c : counts) w.push_back(static_cast<double>(c) / total);
  return Weights(std::move(w));
}

Weights Weights::uniform(std::size_t m) {
  return Weights(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

double Weights::min() const { return *std::min_element(w_.begin(), w_.end()); }

Weights Weights::permuted(std::span<const std::size_t> order) const {
  std::vector<double> out;
  out.reserve(order.size());
  for (auto i : order) out.push_back(w_.at(i));
  return Weights(std::move(out));
}

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> points) : points_(std::move(points)) {
  if (points_.empty()) throw DomainError("empirical measure needs at least one point");
  for (double p : points_) {
    if (!std::isfinite(p)) throw DomainError("empirical measure contains a non-finite point");
  }
  std::sort(points_.begin(), points_.end());
}

double EmpiricalMeasure::mean() const {
  return std::accumulate(points_.begin(), points_.end(), 0.0) / static_cast<double>(points_.size());
}

double EmpiricalMeasure::quantile(double t) const {
  if (!(t > 0.0 && t < 1.0)) {
    throw DomainError(fmt::format("quantile level must lie in (0, 1), got {}", t));
  }
  const auto n = points_.size();
  auto idx = static_cast<std::size_t>(std::ceil(t * static_cast<double>(n)));
  idx = std::clamp<std::size_t>(idx, 1, n);
  return points_[idx - 1];
}

double EmpiricalMeasure::cdf(double z) const {
  const auto it = std::upper_bound(points_.begin(), points_.end(), z);
  return static_cast<double>(it - points_.begin()) / static_cast<double>(points_.size());
}

void require_within(const EmpiricalMeasure& m, const DomainInterval& omega, double slack) {
  if (m.front() < omega.lo - slack || m.back() > omega.hi + slack) {
    throw DomainError(fmt::format("sample range [{}, {}] leaves [{}, {}] by more than {}",
                                  m.front(), m.back(), omega.lo, omega.hi, slack));
  }
}

double quantile(const EmpiricalMeasure& m, double t) { return m.quantile(t); }

QuantileFunction::QuantileFunction(std::vector<double> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (grid_.empty() || grid_.size() != values_.size()) {
    throw DomainError("quantile function needs matching, non-empty grid and values");
  }
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    if (!(grid_[i] > 0.0 && grid_[i] < 1.0)) throw DomainError("quantile levels must lie in (0, 1)");
    if (i > 0 && !(grid_[i] > grid_[i - 1])) throw DomainError("quantile levels must increase strictly");
    if (i > 0 && values_[i] < values_[i - 1]) throw DomainError("quantile values must be nondecreasing");
  }
}

double QuantileFunction::operator()(double t) const {
  if (t <= grid_.front()) return values_.front();
  if (t >= grid_.back()) return values_.back();
  const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  const auto k = static_cast<std::size_t>(it - grid_.begin());
  const double frac = (t - grid_[k - 1]) / (grid_[k] - grid_[k - 1]);
  return values_[k - 1] + frac * (values_[k] - values_[k - 1]);
}

void QuantileFunction::write_csv(std::ostream& os) const {
  os << "t,value\n";
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    os << fmt::format("{:.17g},{:.17g}\n", grid_[i], values_[i]);
  }
}

QuantileFunction QuantileFunction::read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "t,value") throw InputError("quantile CSV must start with 't,value'");
  std::vector<double> grid, values;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InputError("malformed quantile CSV row: " + line);
    grid.push_back(std::stod(line.substr(0, comma)));
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  return QuantileFunction(std::move(grid), std::move(values));
}

std::vector<double> midpoint_levels(std::size_t size) {
  std::vector<double> levels(size);
  for (std::size_t g = 0; g < size; ++g) {
    levels[g] = (static_cast<double>(g) + 0.5) / static_cast<double>(size);
  }
  return levels;
}

double transport_cost(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.size() == 0 || b.size() == 0) throw DomainError("transport cost of an empty measure");
  const auto pa = a.points();
  const auto pb = b.points();
  const std::uint64_t na = pa.size();
  const std::uint64_t nb = pb.size();
  if (na == nb) {
    double acc = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
      const double d = pa[i] - pb[i];
      acc += 0.5 * d * d;
    }
    return acc / static_cast<double>(na);
  }
  // Breakpoints i/na and j/nb in units of 1/(na nb).
  const double denom = static_cast<double>(na) * static_cast<double>(nb);
  std::uint64_t ia = 0, ib = 0, pos = 0;
  double acc = 0.0;
  while (ia < na && ib < nb) {
    const std::uint64_t next_a = (ia + 1) * nb;
    const std::uint64_t next_b = (ib + 1) * na;
    const std::uint64_t next = std::min(next_a, next_b);
    const double d = pa[ia] - pb[ib];
    acc += 0.5 * d * d * static_cast<double>(next - pos);
    pos = next;
    if (next_a == next) ++ia;
    if (next_b == next) ++ib;
  }
  return acc / denom;
}

double w2_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b, W2Convention convention) {
  const double half = transport_cost(a, b);
  return std::sqrt(convention == W2Convention::kHalf ? half : 2.0 * half);
}

QuantileFunction barycenter_oracle(std::span<const EmpiricalMeasure> ms, const Weights& w,
                                   std::size_t grid_size) {
  if (ms.size() != w.size()) {
    throw DomainError(fmt::format("barycenter oracle got {} measures but {} weights", ms.size(), w.size()));
  }
  if (grid_size < 2) throw ConfigError("barycenter grid needs at least two levels");
  auto levels = midpoint_levels(grid_size);
  std::vector<double> values(grid_size, 0.0);
  for (std::size_t s = 0; s < ms.size(); ++s) {
    for (std::size_t g = 0; g < grid_size; ++g) values[g] += w[s] * ms[s].quantile(levels[g]);
  }
  // Rounding can break monotonicity between equal order statistics.
  for (std::size_t g = 1; g < grid_size; ++g) values[g] = std::max(values[g], values[g - 1]);
  return QuantileFunction(std::move(levels), std::move(values));
}

MonotoneMap oracle_map(const EmpiricalMeasure& source, const QuantileFunction& bary,
                       const KnotGrid& grid, const LipschitzBound& lip) {
  if (source.size() == 0) throw DomainError("oracle map needs a non-empty source");
  if (bary.size() < 2) throw ConfigError("barycenter quantile grid too coarse to interpolate");
  const auto pts = source.points();
  const auto n = pts.size();
  const double nd = static_cast<double>(n);
  const auto knots = grid.knots();

  auto raw_value = [&](double z) -> double {
    if (n == 1) return bary(0.5) + (z - pts[0]);
    if (z <= pts.front()) return bary(0.5 / nd) + (z - pts.front());
    if (z >= pts.back()) return bary((nd - 0.5) / nd) + (z - pts.back());
    // pts[i] <= z < pts[i+1] with pts[i] < pts[i+1]
    const auto it = std::upper_bound(pts.begin(), pts.end(), z);
    const auto hi = static_cast<std::size_t>(it - pts.begin());
    const auto lo = hi - 1;
    const double frac = (z - pts[lo]) / (pts[hi] - pts[lo]);
    const double level = (static_cast<double>(lo) + 0.5 + frac) / nd;
    return bary(level);
  };

  std::vector<double> raw(knots.size());
  for (std::size_t k = 0; k < knots.size(); ++k) raw[k] = raw_value(knots[k]);

  // Clip increments into the slope box, then re-anchor to the raw values on
  // the sample support (least squares over the level).
  std::vector<double> cum(knots.size(), 0.0);
  for (std::size_t k = 1; k < knots.size(); ++k) {
    const double h = knots[k] - knots[k - 1];
    const double inc = std::clamp(raw[k] - raw[k - 1], h * lip.min_slope(), h * lip.max_slope());
    cum[k] = cum[k - 1] + inc;
  }
  double shift = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < knots.size(); ++k) {
    if (knots[k] >= pts.front() && knots[k] <= pts.back()) {
      shift += raw[k] - cum[k];
      ++used;
    }
  }
  if (used == 0) {
    for (std::size_t k = 0; k < knots.size(); ++k) shift += raw[k] - cum[k];
    used = knots.size();
  }
  shift /= static_cast<double>(used);
  std::vector<double> values(knots.size());
  for (std::size_t k = 0; k < knots.size(); ++k) values[k] = shift + cum[k];
  return MonotoneMap(std::vector<double>(knots.begin(), knots.end()), std::move(values), lip);
}

double max_distance_to_quantile_average(std::span<const EmpiricalMeasure> ms,
                                        std::span<const double> coefficients) {
  const auto m = ms.size();
  if (m == 0 || coefficients.size() != m) throw DomainError("quantile average needs matching measures and coefficients");
  std::vector<std::size_t> idx(m, 0);
  std::vector<double> acc(m, 0.0);
  double pos = 0.0;
  auto next_of = [&](std::size_t s) {
    return static_cast<double>(idx[s] + 1) / static_cast<double>(ms[s].size());
  };
  // Exact comparison of the fractions (i_s + 1) / n_s.
  auto less = [&](std::size_t s, std::size_t t) {
    return static_cast<unsigned __int128>(idx[s] + 1) * ms[t].size() <
           static_cast<unsigned __int128>(idx[t] + 1) * ms[s].size();
  };
  auto equal = [&](std::size_t s, std::size_t t) { return !less(s, t) && !less(t, s); };
  while (true) {
    bool done = false;
    for (std::size_t s = 0; s < m; ++s) done = done || idx[s] >= ms[s].size();
    if (done) break;
    std::size_t argmin = 0;
    for (std::size_t s = 1; s < m; ++s) {
      if (less(s, argmin)) argmin = s;
    }
    const double next = next_of(argmin);
    const double len = next - pos;
    double avg = 0.0;
    for (std::size_t s = 0; s < m; ++s) avg += coefficients[s] * ms[s].points()[idx[s]];
    for (std::size_t s = 0; s < m; ++s) {
      const double d = ms[s].points()[idx[s]] - avg;
      acc[s] += 0.5 * d * d * len;
    }
    pos = next;
    std::vector<bool> step(m);
    for (std::size_t s = 0; s < m; ++s) step[s] = equal(s, argmin);
    for (std::size_t s = 0; s < m; ++s) idx[s] += step[s] ? 1 : 0;
  }
  double worst = 0.0;
  for (double a : acc) worst = std::max(worst, a);
  return std::sqrt(worst);
}

double minimax_center_upper_bound(std::span<const EmpiricalMeasure> ms, const Weights& w) {
  if (ms.size() != w.size()) {
    throw DomainError(fmt::format("got {} measures but {} weights", ms.size(), w.size()));
  }
  if (ms.size() == 2) {
    const double half[2] = {0.5, 0.5};
    return max_distance_to_quantile_average(ms, half);
  }
  return max_distance_to_quantile_average(ms, w.values());
}

double ks_statistic(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  const auto pa = a.points();
  const auto pb = b.points();
  const double na = static_cast<double>(pa.size());
  const double nb = static_cast<double>(pb.size());
  std::size_t i = 0, j = 0;
  double worst = 0.0;
  while (i < pa.size() && j < pb.size()) {
    const double z = std::min(pa[i], pb[j]);
    while (i < pa.size() && pa[i] <= z) ++i;
    while (j < pb.size() && pb[j] <= z) ++j;
    worst = std::max(worst, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return worst;
}

}  // namespace fairbary
