#pragma once

// Shared vocabulary: errors, tolerances, atoms, observations and the
// block/scenario records produced by the conditioning engine.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace m3 {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Base class for every model-level failure. `name()` is the stable error
/// identifier written into run manifests.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& what)
      : std::runtime_error(what), name_(std::move(name)) {}
  [[nodiscard]] const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

struct NormalizationError : Error {
  explicit NormalizationError(const std::string& m) : Error("NormalizationError", m) {}
};
struct DuplicateSiteError : Error {
  explicit DuplicateSiteError(const std::string& m) : Error("DuplicateSiteError", m) {}
};
struct NonPositiveValueError : Error {
  explicit NonPositiveValueError(const std::string& m) : Error("NonPositiveValueError", m) {}
};
struct InvalidCount : Error {
  explicit InvalidCount(const std::string& m) : Error("InvalidCount", m) {}
};
struct WindowTooSmall : Error {
  explicit WindowTooSmall(const std::string& m) : Error("WindowTooSmall", m) {}
};
struct DegenerateFamily : Error {
  explicit DegenerateFamily(const std::string& m) : Error("DegenerateFamily", m) {}
};
struct TangencyError : Error {
  explicit TangencyError(const std::string& m) : Error("TangencyError", m) {}
};
struct IntervalIntersectionError : Error {
  explicit IntervalIntersectionError(const std::string& m)
      : Error("IntervalIntersectionError", m) {}
};
struct ConflictError : Error {
  explicit ConflictError(const std::string& m) : Error("ConflictError", m) {}
};
struct InfeasibleError : Error {
  explicit InfeasibleError(const std::string& m) : Error("InfeasibleError", m) {}
};
struct TooManyFreeIndices : Error {
  explicit TooManyFreeIndices(const std::string& m) : Error("TooManyFreeIndices", m) {}
};
struct EmptyRegionError : Error {
  explicit EmptyRegionError(const std::string& m) : Error("EmptyRegionError", m) {}
};
struct LabellingError : Error {
  explicit LabellingError(const std::string& m) : Error("LabellingError", m) {}
};
struct OffLatticeError : Error {
  explicit OffLatticeError(const std::string& m) : Error("OffLatticeError", m) {}
};
struct AcceptanceTooLow : Error {
  explicit AcceptanceTooLow(const std::string& m) : Error("AcceptanceTooLow", m) {}
};
struct SingularCovarianceError : Error {
  explicit SingularCovarianceError(const std::string& m)
      : Error("SingularCovarianceError", m) {}
};
struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& m) : Error("InvalidArgument", m) {}
};

/// Numerical knobs shared by the geometry, scenario and sampling layers.
struct Tolerances {
  double root_tol = 1e-10;        // relative, on curve values at a crossing
  double quad_tol = 1e-8;         // relative, adaptive quadrature
  double tangency_tol = 1e-8;     // relative, pair-weight denominator
  double strict_slack = 1e-9;     // relative margin for "strictly below"
  double epsilon = 1e-6;          // tolerance grouping of near-intersections
  std::size_t scan_points = 4096; // initial sign-change scan resolution
  std::size_t max_scan_points = std::size_t{1} << 20;
  std::size_t max_free = 12;      // cap on non-forced indices in enumeration
  double sampler_cell = 0.005;    // cell width of inverse-CDF tables
  bool check_labelling = true;
};

/// One Poisson atom (s, u, f).
struct Atom {
  double s = 0.0;
  double u = 0.0;
  std::size_t shape_id = 0;
};

/// Conditioning data, sorted by site. `original_index()[k]` is the position
/// of sorted entry k in the caller's input.
class Observations {
 public:
  Observations() = default;

  [[nodiscard]] std::size_t size() const noexcept { return sites_.size(); }
  [[nodiscard]] std::span<const double> sites() const noexcept { return sites_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
  [[nodiscard]] double site(std::size_t i) const { return sites_[i]; }
  [[nodiscard]] double value(std::size_t i) const { return values_[i]; }
  [[nodiscard]] std::span<const std::size_t> original_index() const noexcept {
    return original_;
  }

  /// Same sites, every value multiplied by `factor` (> 0).
  [[nodiscard]] Observations scaled(double factor) const;

  friend Observations canonicalize_observations(std::span<const double> sites,
                                                std::span<const double> values);

 private:
  std::vector<double> sites_;
  std::vector<double> values_;
  std::vector<std::size_t> original_;
};

/// Sorts (site, value) pairs by site and validates them.
/// Throws DuplicateSiteError, NonPositiveValueError or InvalidArgument.
Observations canonicalize_observations(std::span<const double> sites,
                                       std::span<const double> values);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  [[nodiscard]] double length() const noexcept { return hi - lo; }
};

/// A point (x0, y0, f) on which every curve of its block meets the envelope.
struct CandidatePoint {
  double x0 = 0.0;
  double y0 = 0.0;
  std::size_t shape_id = 0;
  double weight = 0.0;
};

/// Weighted-equal sample of a conditional law at one evaluation site.
struct EmpiricalPredictive {
  std::vector<double> draws;
  double site = 0.0;
};

}  // namespace m3
