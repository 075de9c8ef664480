#include "m3/numerics.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <numbers>

namespace m3 {

Rng make_rng(std::uint64_t seed, std::uint64_t replicate, std::uint64_t stream) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(replicate), hi(replicate), lo(stream), hi(stream)};
  return Rng(seq);
}

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal_quantile_upper(double q) {
  if (q <= 0.0) return kInf;
  if (q >= 1.0) return -kInf;
  return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double flo,
              double xtol) {
  for (int it = 0; it < 200 && hi - lo > xtol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

QuadratureResult integrate(const std::function<double(double)>& f, double lo, double hi,
                           double rel_tol) {
  if (!(hi > lo)) return {};
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, lo, hi, 30, rel_tol, &err);
  return {v, err};
}

void PiecewiseLinearSampler::add_cell(double x0, double x1, double d0, double d1) {
  if (!(x1 > x0)) return;
  d0 = std::max(d0, 0.0);
  d1 = std::max(d1, 0.0);
  const double mass = 0.5 * (d0 + d1) * (x1 - x0);
  if (!(mass > 0.0)) return;
  cells_.push_back({x0, x1, d0, d1});
  cumulative_.push_back(total_mass() + mass);
}

double PiecewiseLinearSampler::sample(Rng& rng) const {
  if (cells_.empty()) throw EmptyRegionError("sampling from an empty density");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double target = unif(rng) * total_mass();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  if (it == cumulative_.end()) --it;
  const auto k = static_cast<std::size_t>(it - cumulative_.begin());
  const Cell& c = cells_[k];
  const double before = k == 0 ? 0.0 : cumulative_[k - 1];
  const double width = c.x1 - c.x0;
  const double mass = cumulative_[k] - before;
  // Mass to cover inside the cell; F(t) = d0 t + (d1 - d0) t^2 / (2 w).
  const double m = std::clamp(target - before, 0.0, mass);
  const double a = (c.d1 - c.d0) / (2.0 * width);
  const double b = c.d0;
  const double disc = std::max(b * b + 4.0 * a * m, 0.0);
  const double denom = b + std::sqrt(disc);
  double t = denom > 0.0 ? 2.0 * m / denom : width * unif(rng);
  return c.x0 + std::clamp(t, 0.0, width);
}

std::size_t sample_categorical(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw InvalidArgument("categorical weights sum to zero");
  std::uniform_real_distribution<double> unif(0.0, total);
  double target = unif(rng);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (target < weights[k]) return k;
    target -= weights[k];
  }
  for (std::size_t k = weights.size(); k-- > 0;) {
    if (weights[k] > 0.0) return k;
  }
  return 0;
}

double lower_quantile(std::vector<double> data, double q) {
  if (data.empty()) throw InvalidArgument("quantile of an empty sample");
  if (!(q > 0.0 && q < 1.0)) throw InvalidArgument("quantile level must lie in (0, 1)");
  const auto k = static_cast<std::size_t>(std::floor(q * static_cast<double>(data.size() - 1)));
  std::nth_element(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(k), data.end());
  return data[k];
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw InvalidArgument("KS statistic of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("KS statistic of an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

}  // namespace m3
