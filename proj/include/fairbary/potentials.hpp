#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fairbary/maps.hpp"
#include "fairbary/measures.hpp"

namespace fairbary {

/// Where inside an inverse chart a point of the barycenter domain falls.
struct ChartPosition {
  // -1 below the first knot, K at or above the last, else the interval index.
  std::ptrdiff_t interval;
  // Fractional position inside the interval (interior only).
  double frac;
  double y;
};

/// Potential pair attached to a monotone map theta:
///   u_dagger(z) = int_base^z theta^{-1}(x) dx,   u = (u_dagger)^*.
/// Stores the inverse on its own knots (the forward map's values) together
/// with prefix integrals, so u_dagger is an exact piecewise quadratic.
class PotentialPair {
 public:
  PotentialPair() = default;
  PotentialPair(const MonotoneMap& theta, double base_point);
  /// From inverse knot values on `knots` (no slope validation).
  static PotentialPair from_inverse(std::span<const double> knots,
                                    std::span<const double> inverse_values, double base_point);

  double u_dagger(double z) const { return primitive(z) - primitive_at_base_; }
  /// Closed-form conjugate: the supremum of x z - u_dagger(z) is attained at
  /// z = theta(x).
  double u(double x) const;
  double theta(double x) const { return locate_image(x).y; }
  double theta_inverse(double z) const;

  double base_point() const { return base_; }
  std::span<const double> inverse_knots() const { return z_; }
  std::span<const double> inverse_values() const { return v_; }
  std::span<const double> prefix_integrals() const { return prefix_; }

  /// int_{z_0}^{z} theta^{-1}.
  double primitive(double z) const;
  /// Image y = theta(x) and its position on the inverse knots.
  ChartPosition locate_image(double x) const;

 private:
  void finish();

  std::vector<double> z_;       // inverse knots (barycenter side)
  std::vector<double> v_;       // inverse values theta^{-1}(z_k)
  std::vector<double> prefix_;  // int_{z_0}^{z_k} theta^{-1}
  double base_ = 0.0;
  double primitive_at_base_ = 0.0;
};

struct CorrelationValue {
  double value = 0.0;
  std::vector<double> per_group;
};

std::vector<PotentialPair> potentials_of(std::span<const MonotoneMap> maps, double base_point);

/// C(u, nu_n) = sum_s w_s (1/n_s) sum_i u_s(z_i^{(s)}).
CorrelationValue multiple_correlation(std::span<const MonotoneMap> maps,
                                      std::span<const EmpiricalMeasure> ms, const Weights& w,
                                      double base_point);
CorrelationValue multiple_correlation(const CongruentFamily& family,
                                      std::span<const EmpiricalMeasure> ms, const Weights& w);

/// Population measures described by their quantile functions; expectations use
/// the composite midpoint rule in probability space.
struct QuadratureSpec {
  std::vector<std::function<double(double)>> quantiles;
  std::size_t resolution = std::size_t{1} << 14;

  void validate(std::size_t groups) const;
  /// int_0^1 f(Q_s(t)) dt
  double expectation(std::size_t s, const std::function<double(double)>& f) const;
};

inline constexpr std::size_t kMinQuadratureResolution = std::size_t{1} << 10;

/// E_nu (u_theta - u_theta*) by quadrature. Both families must share weights
/// and the potential base point.
double correlation_gap(std::span<const MonotoneMap> family, std::span<const MonotoneMap> oracle,
                       const Weights& w, const QuadratureSpec& spec, double base_point);

/// d^2_nu(theta, theta*) = sum_s w_s int (theta_s - theta*_s)^2 dnu_s by quadrature.
double map_distance_sq(std::span<const MonotoneMap> family, std::span<const MonotoneMap> oracle,
                       const Weights& w, const QuadratureSpec& spec);

}  // namespace fairbary
