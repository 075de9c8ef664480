#pragma once

// Lower envelope of the curves x -> z_i / f(t_i - x), their pairwise
// crossings, the singleton regions where one curve is the strict unique
// minimum, and the limiting weights attached to each.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "m3/core.hpp"
#include "m3/numerics.hpp"
#include "m3/shapes.hpp"

namespace m3 {

struct EnvelopePoint {
  double y = kInf;
  std::vector<std::size_t> argmin;
};

struct RegionIntegralResult {
  std::size_t shape_id = 0;
  std::vector<Interval> region;  // disjoint, sorted
  double integral = 0.0;         // integral of f(t_i - x) over the region
  double error = 0.0;
};

struct SingletonWeight {
  std::size_t index = 0;
  std::vector<RegionIntegralResult> regions;  // one entry per shape
  double weight = 0.0;
};

/// Roots of f(t_i - x)/z_i - f(t_j - x)/z_j where both curves are finite.
/// Tabulated shapes are solved piece by piece; analytic shapes by a
/// sign-change scan refined by bisection.
std::vector<double> pair_roots(const ShapeDescriptor& f, double ti, double zi, double tj,
                               double zj, const Tolerances& tol);

class Envelope {
 public:
  Envelope(Observations obs, std::shared_ptr<const ShapeFamily> family, Tolerances tol = {});

  [[nodiscard]] const Observations& obs() const noexcept { return obs_; }
  [[nodiscard]] const ShapeFamily& family() const noexcept { return *family_; }
  [[nodiscard]] const std::shared_ptr<const ShapeFamily>& family_ptr() const noexcept {
    return family_;
  }
  [[nodiscard]] const Tolerances& tolerances() const noexcept { return tol_; }
  [[nodiscard]] std::size_t size() const noexcept { return obs_.size(); }

  /// z_i / f_k(t_i - x), +inf where the shape vanishes.
  [[nodiscard]] double curve(std::size_t i, std::size_t k, double x) const;
  /// Closed hull of {x : f_k(t_i - x) > 0}.
  [[nodiscard]] Interval curve_support(std::size_t i, std::size_t k) const;
  /// All raw crossings of curves i < j under shape k, sorted.
  [[nodiscard]] const std::vector<double>& roots(std::size_t k, std::size_t i,
                                                 std::size_t j) const;

 private:
  [[nodiscard]] std::size_t pair_slot(std::size_t i, std::size_t j) const;

  Observations obs_;
  std::shared_ptr<const ShapeFamily> family_;
  Tolerances tol_;
  std::vector<std::vector<std::vector<double>>> roots_;  // [shape][pair]
};

/// min_i z_i / f(t_i - x) and the indices attaining it within relative `rel_tol`.
EnvelopePoint envelope_value(const Envelope& env, std::size_t shape_id, double x,
                             double rel_tol = 1e-9);

/// Exact crossings of curves i and j lying on the envelope with strict
/// slack for every other curve, with their pair weights.
std::vector<CandidatePoint> find_pair_intersections(const Envelope& env, std::size_t i,
                                                    std::size_t j);

/// P_F(f) / (y0^2 |z_i f'(t_j - x0) - z_j f'(t_i - x0)|). Throws TangencyError
/// when the denominator is below the tangency tolerance relative to its terms.
double pair_point_weight(const CandidatePoint& point, std::size_t i, std::size_t j,
                         const Observations& obs, const ShapeFamily& family,
                         const Tolerances& tol = {});

/// Region where curve i is the strict unique minimum, per shape, and
/// c_i = sum_f P_F(f) int_D f(t_i - x) dx / z_i^2.
SingletonWeight singleton_region_and_weight(const Envelope& env, std::size_t i);

/// Indices whose curve value is below min(y + eps, y (1 + eps)), y the
/// minimum. Values within relative `slack` of y always qualify.
std::vector<std::size_t> group_by_tolerance(std::span<const double> curve_values, double epsilon,
                                            double slack);

/// A crossing on the envelope together with the group of curves meeting there.
struct GroupHit {
  std::vector<std::size_t> members;
  CandidatePoint point;   // weight from the two smallest members
  bool exact = true;      // every member within root tolerance of y0
};

/// Every raw crossing grouped with tolerance `epsilon`. Groups of three or
/// more seen from several crossings of the same shape are kept once, from
/// the crossing of their two smallest members when available.
std::vector<GroupHit> grouped_intersections(const Envelope& env, double epsilon);

/// Inverse-CDF table for the density proportional to f(t_i - x) on `region`.
/// Exact for tabulated shapes; cells of width `cell` otherwise.
PiecewiseLinearSampler region_sampler(const ShapeDescriptor& f, double ti,
                                      const std::vector<Interval>& region, double cell);

}  // namespace m3
