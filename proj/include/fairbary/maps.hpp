#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fairbary/measures.hpp"

namespace fairbary {

/// Bi-Lipschitz constant of the map class: slopes lie in [1/L, L].
struct LipschitzBound {
  double L = 2.0;

  LipschitzBound() = default;
  explicit LipschitzBound(double value);

  double min_slope() const { return 1.0 / L; }
  double max_slope() const { return L; }
};

/// Equispaced sieve knots spanning [omega.lo, omega.hi] with 2^level intervals.
class KnotGrid {
 public:
  KnotGrid() = default;
  KnotGrid(const DomainInterval& omega, int level);

  int level() const { return level_; }
  std::size_t intervals() const { return knots_.size() - 1; }
  std::span<const double> knots() const { return knots_; }
  double spacing() const { return spacing_; }
  const DomainInterval& domain() const { return omega_; }

  /// One level finer: every interval split in two.
  KnotGrid refined() const { return KnotGrid(omega_, level_ + 1); }

 private:
  DomainInterval omega_;
  int level_ = 0;
  double spacing_ = 1.0;
  std::vector<double> knots_;
};

/// Strictly increasing piecewise-linear map with slope-1 extensions:
/// theta(z) = z + c_inf below the first knot and z + c_sup above the last.
class MonotoneMap {
 public:
  MonotoneMap() = default;
  /// Throws DomainError if knots are not strictly increasing or a slope
  /// leaves [1/L, L] (relative tolerance 1e-9).
  MonotoneMap(std::vector<double> knots, std::vector<double> values, LipschitzBound lip);

  static MonotoneMap identity(const DomainInterval& omega, LipschitzBound lip);
  static MonotoneMap translation(const DomainInterval& omega, double shift,
                                 LipschitzBound lip);
  static MonotoneMap affine(const DomainInterval& omega, double slope, double intercept,
                            LipschitzBound lip);

  double operator()(double z) const { return eval(z); }
  double eval(double z) const;

  /// theta^{-1}: knots and values swapped, extension constants negated.
  MonotoneMap inverse() const;

  std::span<const double> knots() const { return knots_; }
  std::span<const double> values() const { return values_; }
  std::size_t intervals() const { return knots_.size() - 1; }
  double c_inf() const { return values_.front() - knots_.front(); }
  double c_sup() const { return values_.back() - knots_.back(); }
  const LipschitzBound& lipschitz() const { return lip_; }
  double slope(std::size_t k) const;

  /// Index k with knots[k] <= z < knots[k+1], clamped to [0, intervals-1].
  std::size_t locate(double z) const;

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  LipschitzBound lip_;
};

bool operator==(const MonotoneMap& a, const MonotoneMap& b);

MonotoneMap invert(const MonotoneMap& map);

/// M maps whose inverses are parameterised on one shared KnotGrid and satisfy
/// sum_s w_s theta_s^{-1}(z) = z at every knot (and hence on all of R).
class CongruentFamily {
 public:
  CongruentFamily() = default;

  const KnotGrid& grid() const { return grid_; }
  const Weights& weights() const { return weights_; }
  const LipschitzBound& lipschitz() const { return lip_; }
  std::size_t size() const { return forward_.size(); }

  /// theta_s
  const MonotoneMap& map(std::size_t s) const { return forward_[s]; }
  /// theta_s^{-1} on the shared grid
  const MonotoneMap& inverse(std::size_t s) const { return inverse_[s]; }
  std::span<const MonotoneMap> maps() const { return forward_; }
  /// Inverse knot values of group s.
  std::span<const double> inverse_values(std::size_t s) const {
    return inverse_[s].values();
  }

  /// max_k |sum_s w_s theta_s^{-1}(z_k) - z_k|
  double knot_residual() const;
  /// Same residual over `points` equispaced evaluation points spanning a
  /// margin of one domain width on either side of the grid.
  double dense_residual(std::size_t points = 4096) const;

  /// Family with group order permuted: result.map(i) = map(order[i]).
  CongruentFamily permuted(std::span<const std::size_t> order) const;

  friend CongruentFamily make_congruent(std::span<const std::vector<double>> inverse_values,
                                        const KnotGrid& grid, const Weights& w,
                                        LipschitzBound lip);
  friend CongruentFamily assemble_family(std::span<const std::vector<double>> inverse_values,
                                         const KnotGrid& grid, const Weights& w,
                                         LipschitzBound lip);

 private:
  // Validates every slope; the rows are the M inverse knot-value rows.
  static CongruentFamily build(std::vector<std::vector<double>> rows, const KnotGrid& grid,
                               const Weights& w, LipschitzBound lip);

  KnotGrid grid_;
  Weights weights_;
  LipschitzBound lip_;
  std::vector<MonotoneMap> inverse_;
  std::vector<MonotoneMap> forward_;
};

/// Builds a congruent family from M-1 inverse knot-value rows; the last inverse
/// is (z - sum_{s<M} w_s v_s) / w_M. Throws InfeasibleError naming the first
/// knot interval whose slope leaves [1/L, L].
CongruentFamily make_congruent(std::span<const std::vector<double>> inverse_values,
                               const KnotGrid& grid, const Weights& w, LipschitzBound lip);

/// Family from all M inverse rows as stored (no re-induction); checks slopes and
/// a knot congruency residual of at most 1e-10.
CongruentFamily assemble_family(std::span<const std::vector<double>> inverse_values,
                                const KnotGrid& grid, const Weights& w, LipschitzBound lip);

CongruentFamily identity_family(const KnotGrid& grid, const Weights& w, LipschitzBound lip);

/// Largest j >= 0 with 2^j <= (n / ln n)^{1/(alpha + beta)}; 0 when n <= e.
int sieve_level(double n_tilde, double alpha, double beta);

}  // namespace fairbary
