#include "fairbary/potentials.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fairbary/error.hpp"

namespace fairbary {

PotentialPair::PotentialPair(const MonotoneMap& theta, double base_point)
    : z_(theta.values().begin(), theta.values().end()),
      v_(theta.knots().begin(), theta.knots().end()),
      base_(base_point) {
  finish();
}

PotentialPair PotentialPair::from_inverse(std::span<const double> knots,
                                          std::span<const double> inverse_values,
                                          double base_point) {
  if (knots.size() < 2 || knots.size() != inverse_values.size()) {
    throw DomainError("inverse chart needs at least two knots and matching values");
  }
  PotentialPair out;
  out.z_.assign(knots.begin(), knots.end());
  out.v_.assign(inverse_values.begin(), inverse_values.end());
  out.base_ = base_point;
  out.finish();
  return out;
}

void PotentialPair::finish() {
  prefix_.assign(z_.size(), 0.0);
  for (std::size_t k = 0; k + 1 < z_.size(); ++k) {
    prefix_[k + 1] = prefix_[k] + 0.5 * (z_[k + 1] - z_[k]) * (v_[k] + v_[k + 1]);
  }
  primitive_at_base_ = primitive(base_);
}

double PotentialPair::primitive(double z) const {
  const std::size_t last = z_.size() - 1;
  if (z < z_.front()) {
    const double dz = z - z_.front();
    return 0.5 * dz * dz + v_.front() * dz;
  }
  if (z >= z_.back()) {
    const double dz = z - z_.back();
    return prefix_[last] + v_.back() * dz + 0.5 * dz * dz;
  }
  const auto it = std::upper_bound(z_.begin(), z_.end(), z);
  const auto k = std::min(static_cast<std::size_t>(it - z_.begin()) - 1, last - 1);
  const double dz = z - z_[k];
  const double slope = (v_[k + 1] - v_[k]) / (z_[k + 1] - z_[k]);
  return prefix_[k] + v_[k] * dz + 0.5 * slope * dz * dz;
}

ChartPosition PotentialPair::locate_image(double x) const {
  const auto k_last = static_cast<std::ptrdiff_t>(z_.size() - 1);
  if (x < v_.front()) return {-1, 0.0, z_.front() + (x - v_.front())};
  if (x >= v_.back()) return {k_last, 0.0, z_.back() + (x - v_.back())};
  const auto it = std::upper_bound(v_.begin(), v_.end(), x);
  const auto k = std::min<std::ptrdiff_t>(it - v_.begin() - 1, k_last - 1);
  const double t = (x - v_[k]) / (v_[k + 1] - v_[k]);
  return {k, t, z_[k] + t * (z_[k + 1] - z_[k])};
}

double PotentialPair::theta_inverse(double z) const {
  if (z <= z_.front()) return v_.front() + (z - z_.front());
  if (z >= z_.back()) return v_.back() + (z - z_.back());
  const auto it = std::upper_bound(z_.begin(), z_.end(), z);
  const auto k = static_cast<std::size_t>(it - z_.begin()) - 1;
  const double t = (z - z_[k]) / (z_[k + 1] - z_[k]);
  return v_[k] + t * (v_[k + 1] - v_[k]);
}

double PotentialPair::u(double x) const {
  const double y = locate_image(x).y;
  return x * y - u_dagger(y);
}

std::vector<PotentialPair> potentials_of(std::span<const MonotoneMap> maps, double base_point) {
  std::vector<PotentialPair> out;
  out.reserve(maps.size());
  for (const auto& m : maps) out.emplace_back(m, base_point);
  return out;
}

CorrelationValue multiple_correlation(std::span<const MonotoneMap> maps,
                                      std::span<const EmpiricalMeasure> ms, const Weights& w,
                                      double base_point) {
  if (maps.size() != ms.size() || ms.size() != w.size()) {
    throw DomainError(fmt::format("multiple correlation needs matching sizes, got {} maps, {} measures, {} weights",
                                  maps.size(), ms.size(), w.size()));
  }
  CorrelationValue out;
  out.per_group.resize(maps.size());
  for (std::size_t s = 0; s < maps.size(); ++s) {
    if (ms[s].size() == 0) throw DomainError(fmt::format("group {} sample is empty", s));
    const PotentialPair pot(maps[s], base_point);
    double acc = 0.0;
    for (double z : ms[s].points()) acc += pot.u(z);
    out.per_group[s] = acc / static_cast<double>(ms[s].size());
    out.value += w[s] * out.per_group[s];
  }
  return out;
}

CorrelationValue multiple_correlation(const CongruentFamily& family,
                                      std::span<const EmpiricalMeasure> ms, const Weights& w) {
  return multiple_correlation(family.maps(), ms, w, family.grid().domain().base_point());
}

void QuadratureSpec::validate(std::size_t groups) const {
  if (resolution < kMinQuadratureResolution) {
    throw ConfigError(fmt::format("quadrature resolution {} below the minimum {}", resolution,
                                  kMinQuadratureResolution));
  }
  if (quantiles.size() != groups) {
    throw DomainError(fmt::format("quadrature spec has {} groups, expected {}", quantiles.size(), groups));
  }
}

double QuadratureSpec::expectation(std::size_t s, const std::function<double(double)>& f) const {
  const double n = static_cast<double>(resolution);
  double acc = 0.0;
  for (std::size_t i = 0; i < resolution; ++i) {
    const double t = (static_cast<double>(i) + 0.5) / n;
    acc += f(quantiles[s](t));
  }
  return acc / n;
}

double correlation_gap(std::span<const MonotoneMap> family, std::span<const MonotoneMap> oracle,
                       const Weights& w, const QuadratureSpec& spec, double base_point) {
  if (family.size() != oracle.size() || family.size() != w.size()) {
    throw DomainError("correlation gap needs families of matching size");
  }
  spec.validate(w.size());
  double gap = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) {
    const PotentialPair mine(family[s], base_point);
    const PotentialPair best(oracle[s], base_point);
    gap += w[s] * spec.expectation(s, [&](double z) { return mine.u(z) - best.u(z); });
  }
  return gap;
}

double map_distance_sq(std::span<const MonotoneMap> family, std::span<const MonotoneMap> oracle,
                       const Weights& w, const QuadratureSpec& spec) {
  if (family.size() != oracle.size() || family.size() != w.size()) {
    throw DomainError("map distance needs families of matching size");
  }
  spec.validate(w.size());
  double acc = 0.0;
  for (std::size_t s = 0; s < w.size(); ++s) {
    acc += w[s] * spec.expectation(s, [&](double z) {
      const double d = family[s].eval(z) - oracle[s].eval(z);
      return d * d;
    });
  }
  return acc;
}

}  // namespace fairbary
