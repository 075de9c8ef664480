#pragma once

// Unconditional simulation of the moving maxima field and of the free atoms
// lying strictly below the curves of an observation vector.

#include <cstddef>
#include <span>
#include <vector>

#include "m3/core.hpp"
#include "m3/numerics.hpp"
#include "m3/shapes.hpp"

namespace m3 {

/// Interval [a, b] of atom locations; atoms below `u_floor` are never generated.
struct SimWindow {
  double a = 0.0;
  double b = 0.0;
  double u_floor = 0.0;

  /// [min site - radius, max site + radius].
  static SimWindow covering(std::span<const double> sites, double radius);
  [[nodiscard]] double length() const noexcept { return b - a; }
};

/// Throws WindowTooSmall unless the window contains every site inflated by `radius`.
void check_window(const SimWindow& window, std::span<const double> sites, double radius);

/// Poisson atoms (s, u) of intensity ds u^-2 du on the window, in strictly
/// decreasing level order u_k = |W| / Gamma_k.
class PoissonStream {
 public:
  PoissonStream(const SimWindow& window, Rng& rng) : window_(window), rng_(rng) {}

  /// Advances to the next atom; returns its level.
  double next();
  [[nodiscard]] double s() const noexcept { return s_; }
  [[nodiscard]] double u() const noexcept { return u_; }
  [[nodiscard]] std::size_t count() const noexcept { return count_; }

 private:
  SimWindow window_;
  Rng& rng_;
  double gamma_ = 0.0;
  double s_ = 0.0;
  double u_ = kInf;
  std::size_t count_ = 0;
};

/// Draws the shape of one atom and evaluates it at `offsets`. For a finite
/// family returns the chosen shape index; Brown-Resnick shapes are fresh
/// paths and report index 0.
std::size_t draw_shape_values(const ShapeLaw& law, std::span<const double> offsets, Rng& rng,
                              std::span<double> out);

struct FieldDraw {
  std::vector<double> values;
  std::vector<Atom> atoms;               // generation order, decreasing level
  std::vector<std::size_t> generator;    // per site, index into atoms of the maximizer
  double stop_level = 0.0;               // first level not used
};

/// Z(t) = max u f(t - s) at `eval_sites`, exact under truncation. Stops once
/// u * sup_bound falls below the smallest running maximum.
FieldDraw simulate_max_field(const ShapeLaw& law, std::span<const double> eval_sites,
                             const SimWindow& window, Rng& rng);

/// Atoms with u f(t_i - s) < z_i for every observation, down to
/// u * sup_bound >= floor.
std::vector<Atom> simulate_points_below(const ShapeLaw& law, const Observations& obs,
                                        const SimWindow& window, double floor, Rng& rng);

struct FreeStats {
  std::size_t generated = 0;
  std::size_t retained = 0;
  double stop_level = 0.0;
};

/// Raises `current` (maxima at `eval_sites`) by free atoms below the curves
/// of `obs`. Stops when u * sup_bound < floor_factor * min(current); with
/// floor_factor = 1 no omitted atom could change any value.
FreeStats raise_with_free_points(const ShapeLaw& law, const Observations& obs,
                                 const SimWindow& window, std::span<const double> eval_sites,
                                 std::span<double> current, double floor_factor, Rng& rng);

/// Kolmogorov-Smirnov distance to the standard Frechet law exp(-1/z).
double frechet_ks(std::span<const double> samples);

}  // namespace m3
