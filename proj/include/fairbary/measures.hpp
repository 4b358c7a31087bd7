#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace fairbary {

class MonotoneMap;
class KnotGrid;
struct LipschitzBound;

/// Open bounded outcome domain (lo, hi).
struct DomainInterval {
  double lo = 0.0;
  double hi = 1.0;

  DomainInterval() = default;
  DomainInterval(double lo_, double hi_);

  double width() const { return hi - lo; }
  bool contains(double z) const { return z >= lo && z <= hi; }
  double clamp(double z) const;
  /// Lower limit of the potential integral: 0 when it lies in [lo, hi], else lo.
  double base_point() const;
};

/// Group weights on the simplex, M >= 2, all strictly positive.
class Weights {
 public:
  Weights() = default;
  explicit Weights(std::vector<double> w);

  /// Proportions n_s / sum(n).
  static Weights from_counts(std::span<const std::size_t> counts);
  static Weights uniform(std::size_t m);

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t s) const { return w_[s]; }
  double min() const;
  std::span<const double> values() const { return w_; }

  /// Copy with entries reordered so that result[i] = (*this)[order[i]].
  Weights permuted(std::span<const std::size_t> order) const;

 private:
  std::vector<double> w_;
};

/// Sorted one-dimensional sample with left-continuous quantile access.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(std::vector<double> points);

  std::size_t size() const { return points_.size(); }
  std::span<const double> points() const { return points_; }
  double front() const { return points_.front(); }
  double back() const { return points_.back(); }
  double mean() const;

  /// Left-continuous inverse CDF: the order statistic at 1-based index ceil(t n).
  double quantile(double t) const;
  /// Right-continuous empirical CDF.
  double cdf(double z) const;

 private:
  std::vector<double> points_;
};

/// Checks every point lies within [lo - slack, hi + slack].
void require_within(const EmpiricalMeasure& m, const DomainInterval& omega, double slack);

/// Quantile function tabulated on strictly increasing probability levels.
class QuantileFunction {
 public:
  QuantileFunction() = default;
  QuantileFunction(std::vector<double> grid, std::vector<double> values);

  std::span<const double> grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return grid_.size(); }

  /// Linear interpolation between levels, constant beyond the first/last level.
  double operator()(double t) const;

  void write_csv(std::ostream& os) const;
  static QuantileFunction read_csv(std::istream& is);

 private:
  std::vector<double> grid_;
  std::vector<double> values_;
};

/// Equispaced probability levels (g + 1/2) / size.
std::vector<double> midpoint_levels(std::size_t size);

inline constexpr std::size_t kDefaultOracleGrid = std::size_t{1} << 12;

double quantile(const EmpiricalMeasure& m, double t);

/// Squared 2-Wasserstein distance with the half-quadratic cost
/// int 1/2 (z - T(z))^2, evaluated exactly on the merged probability grid.
double transport_cost(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

/// Which quadratic convention a reported W2 value uses.
enum class W2Convention { kHalf, kFull };

/// W2 (not squared) between a and b in the requested convention.
double w2_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                   W2Convention convention = W2Convention::kHalf);

/// Weighted quantile average sum_s w_s Q_s(t) on `grid_size` midpoint levels.
QuantileFunction barycenter_oracle(std::span<const EmpiricalMeasure> ms, const Weights& w,
                                   std::size_t grid_size = kDefaultOracleGrid);

/// Piecewise-linear interpolant of z -> bary(F_source(z)) on `grid`, with the
/// empirical CDF linearised between order statistics and slope-1 extension
/// outside the sample range. Increments are clipped into the slope box of `lip`.
MonotoneMap oracle_map(const EmpiricalMeasure& source, const QuantileFunction& bary,
                       const KnotGrid& grid, const LipschitzBound& lip);

/// sup-bound for inf_nu max_s W2(m_s, nu) (half convention). Exact for M = 2
/// (quantile midpoint); for M > 2 evaluated at the weighted quantile average.
double minimax_center_upper_bound(std::span<const EmpiricalMeasure> ms, const Weights& w);

/// max_s sqrt(int_0^1 1/2 (Q_s - sum_t c_t Q_t)^2) on the merged grid.
double max_distance_to_quantile_average(std::span<const EmpiricalMeasure> ms,
                                        std::span<const double> coefficients);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

}  // namespace fairbary
