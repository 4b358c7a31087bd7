#include "fairbary/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "fairbary/error.hpp"
#include "fairbary/fingerprint.hpp"
#include "fairbary/log.hpp"
#include "fairbary/random.hpp"

namespace fairbary {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (cols_ == 0 || data_.size() != rows_ * cols_) {
    throw InputError(fmt::format("feature matrix {}x{} does not match {} values", rows_, cols_,
                                 data_.size()));
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw InputError("feature matrix contains a non-finite value");
  }
}

FeatureMatrix FeatureMatrix::column(std::vector<double> values) {
  const std::size_t n = values.size();
  return FeatureMatrix(n, 1, std::move(values));
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> indices) const {
  std::vector<double> out;
  out.reserve(indices.size() * cols_);
  for (auto i : indices) {
    const auto r = row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return FeatureMatrix(indices.size(), cols_, std::move(out));
}

void GroupSample::validate(const DomainInterval& omega) const {
  if (ys.size() < 2) {
    throw InputError(fmt::format("group {} has {} rows, at least 2 needed", group, ys.size()));
  }
  if (xs.rows() != ys.size()) {
    throw InputError(fmt::format("group {} has {} feature rows for {} outcomes", group, xs.rows(),
                                 ys.size()));
  }
  for (std::size_t i = 0; i < ys.size(); ++i) {
    if (!std::isfinite(ys[i]) || !omega.contains(ys[i])) {
      throw DomainError(fmt::format("group {} outcome {} at row {} lies outside [{}, {}]", group,
                                    ys[i], i, omega.lo, omega.hi));
    }
  }
}

GroupSample GroupSample::select(std::span<const std::size_t> indices) const {
  GroupSample out;
  out.group = group;
  out.xs = xs.select(indices);
  out.ys.reserve(indices.size());
  for (auto i : indices) out.ys.push_back(ys[i]);
  return out;
}

std::string to_string(BaseKind kind) { return kind == BaseKind::kKnn ? "knn" : "kernel"; }

BaseKind base_kind_from_string(const std::string& name) {
  if (name == "knn") return BaseKind::kKnn;
  if (name == "kernel") return BaseKind::kKernel;
  throw ConfigError(fmt::format("unknown base regressor '{}' (expected knn or kernel)", name));
}

BaseRegressor BaseRegressor::fit(const GroupSample& sample, const DomainInterval& omega,
                                 const BaseConfig& cfg) {
  sample.validate(omega);
  BaseRegressor out;
  out.kind_ = cfg.kind;
  out.omega_ = omega;
  out.train_x_ = sample.xs;
  out.train_y_ = sample.ys;
  const std::size_t n = sample.size();
  const auto d = static_cast<double>(sample.xs.cols());
  const double nd = static_cast<double>(n);

  if (cfg.kind == BaseKind::kKnn) {
    std::size_t k = cfg.k.value_or(
        static_cast<std::size_t>(std::ceil(std::pow(nd, 2.0 / (2.0 + d)) - 1e-9)));
    if (k < 1) throw ConfigError("kNN needs k >= 1");
    if (k > n) {
      log::warn("kNN k = {} exceeds group size {}; clamping", k, n);
      k = n;
    }
    out.hyper_ = static_cast<double>(k);
    if (sample.xs.cols() == 1) {
      out.sorted_idx_.resize(n);
      std::iota(out.sorted_idx_.begin(), out.sorted_idx_.end(), 0);
      const auto xs = sample.xs.data();
      std::sort(out.sorted_idx_.begin(), out.sorted_idx_.end(), [&](std::size_t a, std::size_t b) {
        return xs[a] < xs[b] || (xs[a] == xs[b] && a < b);
      });
      out.sorted_x_.reserve(n);
      for (auto i : out.sorted_idx_) out.sorted_x_.push_back(xs[i]);
    }
  } else {
    double h = 0.0;
    if (cfg.bandwidth) {
      h = *cfg.bandwidth;
    } else {
      double sd_sum = 0.0;
      for (std::size_t j = 0; j < sample.xs.cols(); ++j) {
        double mean = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += sample.xs.row(i)[j];
        mean /= nd;
        for (std::size_t i = 0; i < n; ++i) {
          const double c = sample.xs.row(i)[j] - mean;
          sq += c * c;
        }
        sd_sum += std::sqrt(sq / (nd - 1.0));
      }
      const double sd = sd_sum / d;
      h = (sd > 0.0 ? sd : 1.0) * std::pow(nd, -1.0 / (2.0 + d));
    }
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw ConfigError(fmt::format("kernel bandwidth must be positive, got {}", h));
    }
    out.hyper_ = h;
  }
  return out;
}

double BaseRegressor::predict(std::span<const double> x) const {
  if (x.size() != dim()) {
    throw SchemaError(fmt::format("expected {} features, got {}", dim(), x.size()));
  }
  const double raw = kind_ == BaseKind::kKnn
                         ? (sorted_x_.empty() ? predict_knn(x) : predict_knn_sorted(x[0]))
                         : predict_kernel(x);
  return omega_.clamp(raw);
}

std::vector<double> BaseRegressor::predict_batch(const FeatureMatrix& xs, Exec exec) const {
  if (xs.cols() != dim()) {
    throw SchemaError(fmt::format("expected {} features, got {}", dim(), xs.cols()));
  }
  std::vector<double> out(xs.rows());
  const auto n = static_cast<std::ptrdiff_t>(xs.rows());
  if (exec == Exec::kSerial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = predict(xs.row(i));
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = predict(xs.row(i));
  }
  return out;
}

double BaseRegressor::predict_knn(std::span<const double> x) const {
  const std::size_t n = train_y_.size();
  const auto k = static_cast<std::size_t>(hyper_);
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = train_x_.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      const double c = r[j] - x[j];
      acc += c * c;
    }
    dist[i] = {acc, i};
  }
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
  std::sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k));
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += train_y_[dist[i].second];
  return acc / static_cast<double>(k);
}

double BaseRegressor::predict_knn_sorted(double q) const {
  const std::size_t n = sorted_x_.size();
  const auto k = static_cast<std::size_t>(hyper_);
  auto dist = [&](std::size_t p) { return std::abs(sorted_x_[p] - q); };

  // Grow a window of k nearest positions; distances along sorted x are
  // unimodal around q, so the window stays contiguous.
  std::size_t r = static_cast<std::size_t>(
      std::lower_bound(sorted_x_.begin(), sorted_x_.end(), q) - sorted_x_.begin());
  std::size_t l = r;
  double dk = 0.0;
  for (std::size_t taken = 0; taken < k; ++taken) {
    if (r < n && (l == 0 || dist(r) <= dist(l - 1))) {
      dk = dist(r++);
    } else {
      dk = dist(--l);
    }
  }

  // Strictly closer points, then the lowest-index points at distance dk.
  std::size_t a = l, b = r;
  while (a < b && dist(a) == dk) ++a;
  while (b > a && dist(b - 1) == dk) --b;
  double acc = 0.0;
  for (std::size_t p = a; p < b; ++p) acc += train_y_[sorted_idx_[p]];
  std::size_t needed = k - (b - a);
  if (needed > 0) {
    std::vector<std::size_t> ties;
    std::size_t lo = l, hi = r;
    while (lo > 0 && dist(lo - 1) == dk) --lo;
    while (hi < n && dist(hi) == dk) ++hi;
    for (std::size_t p = lo; p < a; ++p) ties.push_back(sorted_idx_[p]);
    for (std::size_t p = b; p < hi; ++p) ties.push_back(sorted_idx_[p]);
    std::sort(ties.begin(), ties.end());
    for (std::size_t i = 0; i < needed; ++i) acc += train_y_[ties[i]];
  }
  return acc / static_cast<double>(k);
}

double BaseRegressor::predict_kernel(std::span<const double> x) const {
  const std::size_t n = train_y_.size();
  std::vector<double> d2(n);
  double min_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = train_x_.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      const double c = r[j] - x[j];
      acc += c * c;
    }
    d2[i] = acc;
    min_d2 = std::min(min_d2, acc);
  }
  const double scale = 0.5 / (hyper_ * hyper_);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double k = std::exp(-(d2[i] - min_d2) * scale);
    num += k * train_y_[i];
    den += k;
  }
  return num / den;
}

FairRegressor::FairRegressor(std::vector<BaseRegressor> base, CongruentFamily maps)
    : base_(std::move(base)), maps_(std::move(maps)) {
  if (base_.size() != maps_.size()) {
    throw SchemaError(fmt::format("{} base regressors for {} maps", base_.size(), maps_.size()));
  }
}

double FairRegressor::base_predict(std::size_t s, std::span<const double> x) const {
  return base_.at(s).predict(x);
}

double FairRegressor::predict(std::size_t s, std::span<const double> x) const {
  return maps_.map(s).eval(base_.at(s).predict(x));
}

std::vector<double> FairRegressor::predict_batch(std::size_t s, const FeatureMatrix& xs,
                                                 Exec exec) const {
  auto out = base_.at(s).predict_batch(xs, exec);
  const auto& map = maps_.map(s);
  for (auto& v : out) v = map.eval(v);
  return out;
}

namespace {

std::uint64_t data_key(const GroupSample& sample) {
  std::vector<double> bytes(sample.ys.begin(), sample.ys.end());
  const auto xs = sample.xs.data();
  bytes.insert(bytes.end(), xs.begin(), xs.end());
  const std::string hex = fingerprint(bytes);
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

}  // namespace

SampleSplit split_sample(const GroupSample& sample, std::uint64_t seed) {
  const std::size_t n = sample.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(seed, data_key(sample)));
  for (std::size_t i = n; i-- > 1;) std::swap(perm[i], perm[uniform_index(rng, i + 1)]);
  const std::size_t first = (n + 1) / 2;
  SampleSplit out;
  out.regression.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(first));
  out.maps.assign(perm.begin() + static_cast<std::ptrdiff_t>(first), perm.end());
  std::sort(out.regression.begin(), out.regression.end());
  std::sort(out.maps.begin(), out.maps.end());
  return out;
}

FairFit fit_fair(std::span<const GroupSample> samples, const Weights& w,
                 const DomainInterval& omega, const FairConfig& cfg) {
  const std::size_t m = samples.size();
  if (m < 2) throw InputError(fmt::format("fair regression needs at least 2 groups, got {}", m));
  if (w.size() != m) {
    throw DomainError(fmt::format("{} groups but {} weights", m, w.size()));
  }
  const std::size_t dim = samples[0].xs.cols();
  for (const auto& g : samples) {
    g.validate(omega);
    if (g.size() < 4) {
      throw InputError(fmt::format("group {} has {} rows, sample splitting needs 4", g.group,
                                   g.size()));
    }
    if (g.xs.cols() != dim) throw SchemaError("groups disagree on the feature dimension");
  }

  FairFit out;
  std::vector<BaseRegressor> base;
  for (const auto& g : samples) {
    SampleSplit split = split_sample(g, cfg.solver.seed);
    base.push_back(BaseRegressor::fit(g.select(split.regression), omega, cfg.base));
    const auto held = g.xs.select(split.maps);
    out.pushforward.emplace_back(base.back().predict_batch(held));
    out.splits.push_back(std::move(split));
  }

  const int level = cfg.level.value_or(select_level(out.pushforward, w, cfg.alpha, cfg.beta));
  out.sieve = SieveSpec(omega, level, cfg.lip, cfg.alpha, cfg.beta);
  out.report = fit_maps(out.pushforward, w, out.sieve, cfg.solver);
  out.model = FairRegressor(std::move(base), out.report.family);
  return out;
}

std::function<double(std::span<const double>)> averaged_reduction(const FairRegressor& fair,
                                                                  const Weights& w) {
  if (w.size() != fair.groups()) throw DomainError("weights do not match the fair regressor");
  return [fair, w](std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t s = 0; s < fair.groups(); ++s) acc += w[s] * fair.predict(s, x);
    return acc;
  };
}

}  // namespace fairbary
