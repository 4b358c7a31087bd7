#include "fairbary/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fairbary {

namespace {

// Accumulator for one contiguous block of points. `partial[k]` collects the
// partially covered hat integrals, `past[j]` counts images for which every hat
// k <= j - 1 is fully covered.
struct Block {
  double u_sum = 0.0;
  std::vector<double> partial;
  std::vector<double> past;

  explicit Block(std::size_t knots) : partial(knots, 0.0), past(knots, 0.0) {}

  void add(const Block& other) {
    u_sum += other.u_sum;
    for (std::size_t k = 0; k < partial.size(); ++k) {
      partial[k] += other.partial[k];
      past[k] += other.past[k];
    }
  }
};

void accumulate(const PotentialPair& pot, std::span<const double> points, Block& block) {
  const auto z = pot.inverse_knots();
  const std::size_t last = z.size() - 1;
  for (double x : points) {
    const ChartPosition pos = pot.locate_image(x);
    block.u_sum += x * pos.y - pot.u_dagger(pos.y);
    if (pos.interval < 0) {
      block.partial[0] += pos.y - z[0];
    } else if (static_cast<std::size_t>(pos.interval) >= last) {
      block.partial[last] += 0.5 * (z[last] - z[last - 1]) + (pos.y - z[last]);
      block.past[last] += 1.0;
    } else {
      const auto j = static_cast<std::size_t>(pos.interval);
      const double h = z[j + 1] - z[j];
      const double t = pos.frac;
      block.partial[j] += (j > 0 ? 0.5 * (z[j] - z[j - 1]) : 0.0) + h * (t - 0.5 * t * t);
      block.partial[j + 1] += 0.5 * h * t * t;
      block.past[j] += 1.0;
    }
  }
}

// d/dv_k of int_{z_0}^{y} v for every k, at a single y.
void primitive_gradient(std::span<const double> z, double y, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t last = z.size() - 1;
  if (y < z[0]) {
    out[0] = y - z[0];
    return;
  }
  for (std::size_t k = 0; k <= last; ++k) {
    // Hat k is supported on [z_{k-1}, z_{k+1}], restricted to [z_0, inf) and
    // extended by the constant 1 beyond z_last.
    double acc = 0.0;
    if (k > 0) {
      const double a = z[k - 1], b = z[k];
      const double hi = std::min(y, b);
      if (hi > a) {
        const double s = (hi - a) / (b - a);
        acc += 0.5 * (b - a) * s * s;
      }
    }
    if (k < last) {
      const double a = z[k], b = z[k + 1];
      const double hi = std::min(y, b);
      if (hi > a) {
        const double s = (hi - a) / (b - a);
        acc += (b - a) * (s - 0.5 * s * s);
      }
    } else if (y > z[last]) {
      acc += y - z[last];
    }
    out[k] = acc;
  }
}

PotentialSums finish(const PotentialPair& pot, const Block& block, std::size_t n) {
  const auto z = pot.inverse_knots();
  const std::size_t knots = z.size();
  const double nd = static_cast<double>(n);
  PotentialSums out;
  out.mean_u = block.u_sum / nd;
  out.grad.assign(knots, 0.0);

  std::vector<double> base_grad(knots);
  primitive_gradient(z, pot.base_point(), base_grad);

  // Images past index j fully cover hats k <= j - 1.
  double covering = 0.0;
  for (std::size_t k = knots; k-- > 0;) {
    if (k + 1 < knots) covering += block.past[k + 1];
    const double full = (k > 0 ? 0.5 * (z[k] - z[k - 1]) : 0.0) +
                        (k + 1 < knots ? 0.5 * (z[k + 1] - z[k]) : 0.0);
    const double mean_primitive_grad = (block.partial[k] + full * covering) / nd;
    out.grad[k] = -(mean_primitive_grad - base_grad[k]);
  }
  return out;
}

}  // namespace

int kernel_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

PotentialSums potential_sums(const PotentialPair& pot, std::span<const double> points, Exec exec) {
  const std::size_t knots = pot.inverse_knots().size();
  if (exec == Exec::kSerial) {
    Block block(knots);
    accumulate(pot, points, block);
    return finish(pot, block, points.size());
  }
  const std::size_t n = points.size();
  const std::size_t chunks = (n + kKernelChunk - 1) / kKernelChunk;
  std::vector<Block> blocks(chunks, Block(knots));
#pragma omp parallel for schedule(static) if (chunks > 1)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kKernelChunk;
    const std::size_t len = std::min(kKernelChunk, n - begin);
    accumulate(pot, points.subspan(begin, len), blocks[static_cast<std::size_t>(c)]);
  }
  Block total(knots);
  for (const auto& b : blocks) total.add(b);
  return finish(pot, total, n);
}

PotentialSums potential_sums_reference(const PotentialPair& pot, std::span<const double> points) {
  const auto z = pot.inverse_knots();
  const std::size_t knots = z.size();
  PotentialSums out;
  out.grad.assign(knots, 0.0);
  std::vector<double> at_y(knots), at_base(knots);
  primitive_gradient(z, pot.base_point(), at_base);
  for (double x : points) {
    const double y = pot.theta(x);
    out.mean_u += pot.u(x);
    primitive_gradient(z, y, at_y);
    for (std::size_t k = 0; k < knots; ++k) out.grad[k] -= at_y[k] - at_base[k];
  }
  const double nd = static_cast<double>(points.size());
  out.mean_u /= nd;
  for (auto& g : out.grad) g /= nd;
  return out;
}

double mean_potential(const PotentialPair& pot, std::span<const double> points, Exec exec) {
  const std::size_t n = points.size();
  if (exec == Exec::kSerial) {
    double acc = 0.0;
    for (double x : points) acc += pot.u(x);
    return acc / static_cast<double>(n);
  }
  const std::size_t chunks = (n + kKernelChunk - 1) / kKernelChunk;
  std::vector<double> sums(chunks, 0.0);
#pragma omp parallel for schedule(static) if (chunks > 1)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(chunks); ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kKernelChunk;
    const std::size_t end = std::min(begin + kKernelChunk, n);
    double acc = 0.0;
    for (std::size_t i = begin; i < end; ++i) acc += pot.u(points[i]);
    sums[static_cast<std::size_t>(c)] = acc;
  }
  double total = 0.0;
  for (double s : sums) total += s;
  return total / static_cast<double>(n);
}

}  // namespace fairbary
