#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fairbary/kernels.hpp"
#include "fairbary/maps.hpp"
#include "fairbary/measures.hpp"
#include "fairbary/potentials.hpp"

namespace fairbary {

/// Sieve Theta_j: congruent families of piecewise-linear maps on 2^j
/// equispaced inverse knots with slope box [1/L, L].
struct SieveSpec {
  int level = 0;
  KnotGrid grid;
  LipschitzBound lip;
  double alpha = 2.0;
  double beta = 1.0;

  SieveSpec() = default;
  SieveSpec(const DomainInterval& omega, int level, LipschitzBound lip, double alpha = 2.0,
            double beta = 1.0);
};

enum class StepRule { kConstant, kInverseSqrt };

struct SolverConfig {
  std::size_t max_iters = 5000;
  double tol_rel_obj = 1e-7;
  StepRule step_rule = StepRule::kConstant;
  double step_scale = 1.0;
  std::uint64_t seed = 0;
  std::size_t window = 50;

  void validate() const;
};

struct FitReport {
  CongruentFamily family;
  std::vector<double> objective_trace;  // running best, one entry per iteration
  std::size_t iterations_used = 0;
  bool converged = false;
  double congruency_residual = 0.0;
  double objective = 0.0;
};

/// Empirical multiple correlation as a function of the free inverse rows
/// v_0..v_{M-2} on the sieve grid; the last inverse is eliminated through
/// congruency.
class EmpiricalObjective {
 public:
  EmpiricalObjective(std::span<const EmpiricalMeasure> ms, const Weights& w, const KnotGrid& grid,
                     Exec exec = Exec::kParallel);

  struct Evaluation {
    double value = 0.0;
    std::vector<double> per_group;
    std::vector<std::vector<double>> grad;  // d value / d v_{s,k}, s < M-1
  };

  Evaluation evaluate(std::span<const std::vector<double>> free_rows) const;
  double value(std::span<const std::vector<double>> free_rows) const;

  /// The induced last inverse row (z - sum_{s<M} w_s v_s) / w_M.
  std::vector<double> induced_row(std::span<const std::vector<double>> free_rows) const;

  std::size_t groups() const { return w_.size(); }
  const KnotGrid& grid() const { return grid_; }

 private:
  std::vector<EmpiricalMeasure> ms_;
  Weights w_;
  KnotGrid grid_;
  double base_;
  Exec exec_;
};

FitReport fit_maps(std::span<const EmpiricalMeasure> ms, const Weights& w, const SieveSpec& spec,
                   const SolverConfig& cfg = {});

/// n~ = min_s n_s / w_s
double effective_sample_size(std::span<const std::size_t> counts, const Weights& w);

int select_level(std::span<const EmpiricalMeasure> ms, const Weights& w, double alpha,
                 double beta);

/// d^2_nu(theta, theta*) with nu_s the given empirical measures.
double map_error(std::span<const MonotoneMap> family, std::span<const MonotoneMap> oracle,
                 std::span<const EmpiricalMeasure> ms, const Weights& w);

inline double map_error(const CongruentFamily& family, const CongruentFamily& oracle,
                        std::span<const EmpiricalMeasure> ms, const Weights& w) {
  return map_error(family.maps(), oracle.maps(), ms, w);
}

/// Same, restricted to the points of nu_s within its [lo_q, hi_q] quantile band.
double map_error_central(std::span<const MonotoneMap> family, std::span<const MonotoneMap> oracle,
                         std::span<const EmpiricalMeasure> ms, const Weights& w, double lo_q,
                         double hi_q);

/// Euclidean projection of per-interval inverse increments onto
///   h/L <= d_s <= hL (s < M-1),  h(1 - w_M L) <= sum_s w_s d_s <= h(1 - w_M / L),
/// i.e. the slope box for every free inverse and for the induced one.
void project_increments(std::span<double> increments, std::span<const double> free_weights,
                        double last_weight, double h, const LipschitzBound& lip);

}  // namespace fairbary
