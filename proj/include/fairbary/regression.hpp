#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairbary/estimator.hpp"
#include "fairbary/kernels.hpp"
#include "fairbary/maps.hpp"
#include "fairbary/measures.hpp"

namespace fairbary {

/// Row-major n x d feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  /// Single-feature column.
  static FeatureMatrix column(std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> data() const { return data_; }

  FeatureMatrix select(std::span<const std::size_t> indices) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct GroupSample {
  std::size_t group = 0;
  FeatureMatrix xs;
  std::vector<double> ys;

  std::size_t size() const { return ys.size(); }
  /// Throws InputError when n < 2 or shapes disagree, DomainError when an
  /// outcome leaves [omega.lo, omega.hi].
  void validate(const DomainInterval& omega) const;
  GroupSample select(std::span<const std::size_t> indices) const;
};

enum class BaseKind { kKnn, kKernel };

std::string to_string(BaseKind kind);
BaseKind base_kind_from_string(const std::string& name);

struct BaseConfig {
  BaseKind kind = BaseKind::kKnn;
  std::optional<std::size_t> k;          // default ceil(n^{2/(2+d)})
  std::optional<double> bandwidth;       // default sd * n^{-1/(2+d)}
};

/// Plug-in per-group regressor; predictions are clipped to omega.
class BaseRegressor {
 public:
  BaseRegressor() = default;

  static BaseRegressor fit(const GroupSample& sample, const DomainInterval& omega,
                           const BaseConfig& cfg = {});

  double predict(std::span<const double> x) const;
  std::vector<double> predict_batch(const FeatureMatrix& xs, Exec exec = Exec::kParallel) const;

  BaseKind kind() const { return kind_; }
  /// k for kNN, bandwidth for the kernel smoother.
  double hyper() const { return hyper_; }
  std::size_t dim() const { return train_x_.cols(); }
  const FeatureMatrix& train_x() const { return train_x_; }
  std::span<const double> train_y() const { return train_y_; }
  const DomainInterval& domain() const { return omega_; }

 private:
  double predict_knn(std::span<const double> x) const;
  double predict_knn_sorted(double x) const;
  double predict_kernel(std::span<const double> x) const;

  BaseKind kind_ = BaseKind::kKnn;
  double hyper_ = 1.0;
  DomainInterval omega_;
  FeatureMatrix train_x_;
  std::vector<double> train_y_;
  // One-dimensional kNN: training indices ordered by (x, index).
  std::vector<double> sorted_x_;
  std::vector<std::size_t> sorted_idx_;
};

class FairRegressor {
 public:
  FairRegressor() = default;
  FairRegressor(std::vector<BaseRegressor> base, CongruentFamily maps);

  std::size_t groups() const { return base_.size(); }
  double base_predict(std::size_t s, std::span<const double> x) const;
  double predict(std::size_t s, std::span<const double> x) const;
  std::vector<double> predict_batch(std::size_t s, const FeatureMatrix& xs,
                                    Exec exec = Exec::kParallel) const;

  const BaseRegressor& base(std::size_t s) const { return base_.at(s); }
  const CongruentFamily& maps() const { return maps_; }

 private:
  std::vector<BaseRegressor> base_;
  CongruentFamily maps_;
};

struct FairConfig {
  BaseConfig base;
  std::optional<int> level;  // sieve level; chosen from the map-half sizes when empty
  LipschitzBound lip{2.0};
  double alpha = 2.0;
  double beta = 1.0;
  SolverConfig solver;
};

/// Per-group split of sample rows into the regression half and the map half.
struct SampleSplit {
  std::vector<std::size_t> regression;
  std::vector<std::size_t> maps;
};

SampleSplit split_sample(const GroupSample& sample, std::uint64_t seed);

struct FairFit {
  FairRegressor model;
  FitReport report;
  SieveSpec sieve;
  std::vector<SampleSplit> splits;
  std::vector<EmpiricalMeasure> pushforward;  // base predictions on the map halves
};

FairFit fit_fair(std::span<const GroupSample> samples, const Weights& w,
                 const DomainInterval& omega, const FairConfig& cfg = {});

/// x -> sum_s w_s fair.predict(s, x)
std::function<double(std::span<const double>)> averaged_reduction(const FairRegressor& fair,
                                                                  const Weights& w);

}  // namespace fairbary
