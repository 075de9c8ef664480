#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "m3/core.hpp"

namespace m3 {

using Rng = std::mt19937_64;

/// Independent, reproducible stream for (seed, replicate, stream id).
Rng make_rng(std::uint64_t seed, std::uint64_t replicate = 0, std::uint64_t stream = 0);

double normal_pdf(double x);
double normal_cdf(double x);
/// Upper tail 1 - Phi(x), accurate for large x.
double normal_sf(double x);
double normal_quantile(double p);
/// Quantile of the upper tail: x with 1 - Phi(x) = q.
double normal_quantile_upper(double q);

/// Bisection on a bracket with f(lo), f(hi) of opposite sign. Stops when the
/// bracket is below `xtol` or after 200 halvings.
double bisect(const std::function<double(double)>& f, double lo, double hi, double flo,
              double xtol);

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

/// Adaptive Gauss-Kronrod (15 points) with relative tolerance `rel_tol`.
QuadratureResult integrate(const std::function<double(double)>& f, double lo, double hi,
                           double rel_tol);

/// Exact sampler for a density that is linear on each cell
/// [x_k, x_{k+1}] of a list of cells. Cells need not be contiguous.
class PiecewiseLinearSampler {
 public:
  PiecewiseLinearSampler() = default;

  /// Adds the cell [x0, x1] with density d0 at x0 and d1 at x1 (both >= 0).
  void add_cell(double x0, double x1, double d0, double d1);

  [[nodiscard]] double total_mass() const noexcept {
    return cumulative_.empty() ? 0.0 : cumulative_.back();
  }
  [[nodiscard]] bool empty() const noexcept { return cells_.empty(); }
  [[nodiscard]] double sample(Rng& rng) const;

 private:
  struct Cell {
    double x0, x1, d0, d1;
  };
  std::vector<Cell> cells_;
  std::vector<double> cumulative_;
};

/// Index drawn with probability proportional to `weights` (all >= 0, sum > 0).
std::size_t sample_categorical(std::span<const double> weights, Rng& rng);

/// Lower empirical quantile of unsorted data: the order statistic at
/// floor(q (n - 1)).
double lower_quantile(std::vector<double> data, double q);

/// Kolmogorov-Smirnov distance between an empirical sample and a CDF.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace m3
