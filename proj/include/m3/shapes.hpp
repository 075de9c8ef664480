#pragma once

// Shape functions f: R -> [0, inf) and finite shape families with selection
// probabilities. Every shape is exactly zero outside its support window.

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "m3/core.hpp"
#include "m3/numerics.hpp"

namespace m3 {

/// Closed-form shape, truncated to [-support_radius, support_radius].
struct AnalyticShape {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  double support_radius = 0.0;
  double sup_value = 0.0;
};

/// Polygonal shape through (knots[k], values[k]); zero outside the knot hull.
class TabulatedShape {
 public:
  TabulatedShape(std::vector<double> knots, std::vector<double> values);

  [[nodiscard]] double value(double x) const;
  /// Segment slope; at a knot, the mean of the two one-sided slopes.
  [[nodiscard]] double derivative(double x) const;
  /// Exact integral of the polygon over [a, b] (zero outside the hull).
  [[nodiscard]] double integral(double a, double b) const;

  [[nodiscard]] const std::vector<double>& knots() const noexcept { return knots_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
  [[nodiscard]] double lower() const noexcept { return knots_.front(); }
  [[nodiscard]] double upper() const noexcept { return knots_.back(); }
  [[nodiscard]] double max_value() const noexcept { return max_value_; }

  /// Index k of the segment [knots[k], knots[k+1]] containing x (x inside hull).
  [[nodiscard]] std::size_t segment(double x) const;

 private:
  [[nodiscard]] double slope(std::size_t k) const {
    return (values_[k + 1] - values_[k]) / (knots_[k + 1] - knots_[k]);
  }

  std::vector<double> knots_;
  std::vector<double> values_;
  double max_value_ = 0.0;
  bool uniform_ = false;
  double step_ = 0.0;
};

class ShapeDescriptor {
 public:
  ShapeDescriptor(AnalyticShape shape);   // NOLINT(google-explicit-constructor)
  ShapeDescriptor(TabulatedShape shape);  // NOLINT(google-explicit-constructor)

  [[nodiscard]] double value(double x) const;
  [[nodiscard]] double derivative(double x) const;
  [[nodiscard]] Interval support() const;
  [[nodiscard]] double sup_value() const;
  /// Integral over [a, b] clipped to the support.
  [[nodiscard]] QuadratureResult integral(double a, double b, double rel_tol) const;

  [[nodiscard]] bool is_tabulated() const noexcept {
    return std::holds_alternative<TabulatedShape>(kind_);
  }
  [[nodiscard]] const TabulatedShape& tabulated() const { return std::get<TabulatedShape>(kind_); }
  [[nodiscard]] const AnalyticShape& analytic() const { return std::get<AnalyticShape>(kind_); }

 private:
  std::variant<AnalyticShape, TabulatedShape> kind_;
};

struct FamilyDiagnostics {
  double expected_integral = 0.0;
  double tolerance = 0.0;
  double sup_bound = 0.0;
  double max_tabulated_value = 0.0;
  double support_radius = 0.0;
  double max_value_at_radius = 0.0;  // analytic shapes only
  bool normalization_ok = true;
  bool sup_ok = true;
  bool support_ok = true;
  std::vector<std::string> messages;

  [[nodiscard]] bool ok() const noexcept { return normalization_ok && sup_ok && support_ok; }
};

class ShapeFamily {
 public:
  struct Options {
    double normalization_tolerance = 1e-3;
    double tail_epsilon = 1e-8;
    bool sampled = false;
    bool enforce_normalization = true;
  };

  /// Validates probabilities and normalization; throws InvalidArgument on bad
  /// probabilities and NormalizationError when `enforce_normalization` is set.
  static ShapeFamily create(std::vector<ShapeDescriptor> shapes, std::vector<double> probs,
                            Options options);
  static ShapeFamily create(std::vector<ShapeDescriptor> shapes, std::vector<double> probs) {
    return create(std::move(shapes), std::move(probs), Options{});
  }

  [[nodiscard]] std::size_t size() const noexcept { return shapes_.size(); }
  [[nodiscard]] const ShapeDescriptor& shape(std::size_t k) const { return shapes_[k]; }
  [[nodiscard]] const std::vector<double>& probs() const noexcept { return probs_; }
  [[nodiscard]] double prob(std::size_t k) const { return probs_[k]; }
  [[nodiscard]] double support_radius() const noexcept { return support_radius_; }
  [[nodiscard]] double sup_bound() const noexcept { return sup_bound_; }
  [[nodiscard]] const Options& options() const noexcept { return options_; }
  [[nodiscard]] const FamilyDiagnostics& diagnostics() const noexcept { return diagnostics_; }

  /// Shape index drawn with the selection probabilities.
  [[nodiscard]] std::size_t sample_index(Rng& rng) const;

  [[nodiscard]] double value(std::size_t k, double x) const { return shapes_[k].value(x); }
  [[nodiscard]] double derivative(std::size_t k, double x) const {
    return shapes_[k].derivative(x);
  }

 private:
  friend FamilyDiagnostics validate_family(const ShapeFamily&, std::optional<double>);

  std::vector<ShapeDescriptor> shapes_;
  std::vector<double> probs_;
  std::vector<double> cumulative_;
  double support_radius_ = 0.0;
  double sup_bound_ = 0.0;
  Options options_;
  FamilyDiagnostics diagnostics_;
};

/// Numerically checks normalization, sup bound and support radius. Pure.
/// Throws NormalizationError if the expected integral misses 1 by more than
/// `tolerance` (defaults to the family's own tolerance).
FamilyDiagnostics validate_family(const ShapeFamily& family,
                                  std::optional<double> tolerance = std::nullopt);

double eval_shape(const ShapeFamily& family, std::size_t shape_id, double x);
double eval_shape_derivative(const ShapeFamily& family, std::size_t shape_id, double x);

/// Standard Gaussian density, truncated at `support_radius`.
ShapeDescriptor smith_shape(double support_radius = 6.0);
ShapeFamily build_smith_family(double support_radius = 6.0);

/// Grid on which Brown-Resnick shapes are tabulated; must contain 0.
struct BrShapeConfig {
  std::vector<double> grid;

  /// {lo, lo + step, ..., hi}, with 0 represented exactly.
  static BrShapeConfig uniform(double lo = -5.0, double hi = 5.0, double step = 0.1);
  [[nodiscard]] double spacing() const;
  [[nodiscard]] double radius() const;
};

/// One draw of (1/2) exp(-R(t)) on the grid, R built from two independent
/// three-dimensional Brownian motions with drift 1/2 in the first component.
ShapeDescriptor sample_br_shape(const BrShapeConfig& config, Rng& rng);

/// Values of one fresh Brown-Resnick shape at the given offsets only. Same
/// joint law as sample_br_shape followed by evaluation; the Brownian paths
/// are advanced over the gaps between the knots that are actually needed.
void sample_br_values(const BrShapeConfig& config, std::span<const double> offsets, Rng& rng,
                      std::span<double> out);

using ShapeSampler = std::function<ShapeDescriptor(Rng&)>;

/// N independent shape draws with probability 1/N each. Normalization is
/// recorded in the diagnostics, not enforced unless requested.
ShapeFamily build_empirical_family(std::size_t n, const ShapeSampler& sampler, Rng& rng,
                                   bool enforce_normalization = false,
                                   double tolerance = 5e-2);

/// Law of the random shape F as seen by the simulators: either a finite
/// family or a fresh Brown-Resnick path per atom.
class ShapeLaw {
 public:
  explicit ShapeLaw(std::shared_ptr<const ShapeFamily> family);
  explicit ShapeLaw(BrShapeConfig config);

  [[nodiscard]] bool finite() const noexcept { return family_ != nullptr; }
  [[nodiscard]] const ShapeFamily& family() const { return *family_; }
  [[nodiscard]] const std::shared_ptr<const ShapeFamily>& family_ptr() const { return family_; }
  [[nodiscard]] const BrShapeConfig& br_config() const { return br_; }
  [[nodiscard]] double sup_bound() const noexcept { return sup_bound_; }
  [[nodiscard]] double support_radius() const noexcept { return support_radius_; }

 private:
  std::shared_ptr<const ShapeFamily> family_;
  BrShapeConfig br_;
  double sup_bound_ = 0.0;
  double support_radius_ = 0.0;
};

/// Two-column CSV with header "x,value".
void write_tabulated_csv(std::ostream& os, const TabulatedShape& shape);
TabulatedShape read_tabulated_csv(std::istream& is);

}  // namespace m3
