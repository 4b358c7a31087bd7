#pragma once

// Data-parallel inner loops. Every kernel has a plain serial reference and an
// OpenMP variant; the OpenMP variant reduces fixed-size chunks in chunk order,
// so its result does not depend on the thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "fairbary/potentials.hpp"

namespace fairbary {

enum class Exec { kSerial, kParallel };

inline constexpr std::size_t kKernelChunk = 2048;

/// Mean potential over a sample and its gradient with respect to the inverse
/// knot values, by the envelope theorem:
///   d u(x) / d v_k = -d u_dagger(y) / d v_k at y = theta(x).
struct PotentialSums {
  double mean_u = 0.0;
  std::vector<double> grad;  // d mean_u / d v_k, one entry per inverse knot
};

PotentialSums potential_sums(const PotentialPair& pot, std::span<const double> points,
                             Exec exec = Exec::kParallel);

/// Straight per-point, per-knot evaluation; O(n K). Test oracle only.
PotentialSums potential_sums_reference(const PotentialPair& pot, std::span<const double> points);

/// Mean of u over the points (no gradient).
double mean_potential(const PotentialPair& pot, std::span<const double> points,
                      Exec exec = Exec::kParallel);

/// Number of OpenMP threads available to kernels (1 without OpenMP).
int kernel_threads();

}  // namespace fairbary
