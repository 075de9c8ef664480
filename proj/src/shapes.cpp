#include "m3/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

namespace m3 {

// ---------------------------------------------------------------------------
// TabulatedShape

TabulatedShape::TabulatedShape(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() < 2 || knots_.size() != values_.size()) {
    throw InvalidArgument("tabulated shape needs at least two knots and matching values");
  }
  for (std::size_t k = 0; k < knots_.size(); ++k) {
    if (!std::isfinite(knots_[k]) || !std::isfinite(values_[k])) {
      throw InvalidArgument("tabulated shape has non-finite entries");
    }
    if (values_[k] < 0.0) throw InvalidArgument("tabulated shape has a negative value");
    if (k > 0 && !(knots_[k] > knots_[k - 1])) {
      throw InvalidArgument("tabulated knots must be strictly increasing");
    }
    max_value_ = std::max(max_value_, values_[k]);
  }
  step_ = (knots_.back() - knots_.front()) / static_cast<double>(knots_.size() - 1);
  uniform_ = true;
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    if (std::abs((knots_[k] - knots_[k - 1]) - step_) > 1e-9 * step_) {
      uniform_ = false;
      break;
    }
  }
}

std::size_t TabulatedShape::segment(double x) const {
  const std::size_t last = knots_.size() - 2;
  std::size_t k = 0;
  if (uniform_) {
    const double pos = std::floor((x - knots_.front()) / step_);
    k = pos <= 0.0 ? 0 : std::min(static_cast<std::size_t>(pos), last);
    while (k > 0 && x < knots_[k]) --k;
    while (k < last && x >= knots_[k + 1]) ++k;
  } else {
    auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
    const auto idx = static_cast<std::size_t>(it - knots_.begin());
    k = idx == 0 ? 0 : std::min(idx - 1, last);
  }
  return k;
}

double TabulatedShape::value(double x) const {
  if (x < knots_.front() || x > knots_.back()) return 0.0;
  const std::size_t k = segment(x);
  if (x == knots_[k]) return values_[k];
  if (x == knots_[k + 1]) return values_[k + 1];
  const double w = (x - knots_[k]) / (knots_[k + 1] - knots_[k]);
  return values_[k] + w * (values_[k + 1] - values_[k]);
}

double TabulatedShape::derivative(double x) const {
  if (x < knots_.front() || x > knots_.back()) return 0.0;
  const std::size_t k = segment(x);
  if (x == knots_[k]) {
    const double left = k > 0 ? slope(k - 1) : 0.0;
    return 0.5 * (left + slope(k));
  }
  if (x == knots_[k + 1]) {  // only the last knot
    return 0.5 * slope(k);
  }
  return slope(k);
}

double TabulatedShape::integral(double a, double b) const {
  a = std::max(a, knots_.front());
  b = std::min(b, knots_.back());
  if (!(b > a)) return 0.0;
  double total = 0.0;
  for (std::size_t k = segment(a); k + 1 < knots_.size() && knots_[k] < b; ++k) {
    const double lo = std::max(a, knots_[k]);
    const double hi = std::min(b, knots_[k + 1]);
    if (hi > lo) total += 0.5 * (value(lo) + value(hi)) * (hi - lo);
  }
  return total;
}

// ---------------------------------------------------------------------------
// ShapeDescriptor

ShapeDescriptor::ShapeDescriptor(AnalyticShape shape) : kind_(std::move(shape)) {
  const auto& a = std::get<AnalyticShape>(kind_);
  if (!a.value || !a.derivative) throw InvalidArgument("analytic shape needs value and derivative");
  if (!(a.support_radius > 0.0)) throw InvalidArgument("analytic shape needs a positive support");
}

ShapeDescriptor::ShapeDescriptor(TabulatedShape shape) : kind_(std::move(shape)) {}

double ShapeDescriptor::value(double x) const {
  if (const auto* t = std::get_if<TabulatedShape>(&kind_)) return t->value(x);
  const auto& a = std::get<AnalyticShape>(kind_);
  if (std::abs(x) > a.support_radius) return 0.0;
  return a.value(x);
}

double ShapeDescriptor::derivative(double x) const {
  if (const auto* t = std::get_if<TabulatedShape>(&kind_)) return t->derivative(x);
  const auto& a = std::get<AnalyticShape>(kind_);
  if (std::abs(x) > a.support_radius) return 0.0;
  return a.derivative(x);
}

Interval ShapeDescriptor::support() const {
  if (const auto* t = std::get_if<TabulatedShape>(&kind_)) return {t->lower(), t->upper()};
  const auto& a = std::get<AnalyticShape>(kind_);
  return {-a.support_radius, a.support_radius};
}

double ShapeDescriptor::sup_value() const {
  if (const auto* t = std::get_if<TabulatedShape>(&kind_)) return t->max_value();
  return std::get<AnalyticShape>(kind_).sup_value;
}

QuadratureResult ShapeDescriptor::integral(double a, double b, double rel_tol) const {
  if (const auto* t = std::get_if<TabulatedShape>(&kind_)) return {t->integral(a, b), 0.0};
  const auto& s = std::get<AnalyticShape>(kind_);
  a = std::max(a, -s.support_radius);
  b = std::min(b, s.support_radius);
  if (!(b > a)) return {};
  return m3::integrate(s.value, a, b, rel_tol);
}

// ---------------------------------------------------------------------------
// ShapeFamily

namespace {

FamilyDiagnostics compute_diagnostics(const ShapeFamily& family, double tolerance) {
  FamilyDiagnostics d;
  d.tolerance = tolerance;
  d.sup_bound = family.sup_bound();
  d.support_radius = family.support_radius();
  const double r = family.support_radius();
  for (std::size_t k = 0; k < family.size(); ++k) {
    const ShapeDescriptor& f = family.shape(k);
    const Interval sup = f.support();
    d.expected_integral += family.prob(k) * f.integral(sup.lo, sup.hi, 1e-12).value;
    if (f.is_tabulated()) {
      d.max_tabulated_value = std::max(d.max_tabulated_value, f.tabulated().max_value());
    } else {
      const double tail = std::max(f.value(sup.lo), f.value(sup.hi));
      d.max_value_at_radius = std::max(d.max_value_at_radius, tail);
      constexpr int kProbe = 2001;
      for (int i = 0; i < kProbe; ++i) {
        const double x = sup.lo + (sup.hi - sup.lo) * i / (kProbe - 1);
        d.max_tabulated_value = std::max(d.max_tabulated_value, f.value(x));
      }
    }
    if (sup.lo < -r * (1 + 1e-12) || sup.hi > r * (1 + 1e-12)) d.support_ok = false;
  }
  if (d.max_tabulated_value > d.sup_bound * (1.0 + 1e-12)) {
    d.sup_ok = false;
    d.messages.push_back("a shape value exceeds the declared sup bound");
  }
  if (d.max_value_at_radius > family.options().tail_epsilon) {
    d.support_ok = false;
    d.messages.push_back("an analytic shape exceeds the tail epsilon at its support radius");
  }
  if (std::abs(d.expected_integral - 1.0) > tolerance) {
    d.normalization_ok = false;
    std::ostringstream os;
    os << "expected integral " << d.expected_integral << " deviates from 1 by more than "
       << tolerance;
    d.messages.push_back(os.str());
  }
  return d;
}

}  // namespace

ShapeFamily ShapeFamily::create(std::vector<ShapeDescriptor> shapes, std::vector<double> probs,
                                Options options) {
  if (shapes.empty()) throw InvalidCount("a shape family needs at least one shape");
  if (shapes.size() != probs.size()) throw InvalidArgument("one probability per shape required");
  double total = 0.0;
  for (double p : probs) {
    if (!(p > 0.0)) throw InvalidArgument("shape probabilities must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("shape probabilities must sum to 1");

  ShapeFamily fam;
  fam.shapes_ = std::move(shapes);
  fam.probs_ = std::move(probs);
  fam.options_ = options;
  for (const auto& s : fam.shapes_) {
    const Interval sup = s.support();
    fam.support_radius_ = std::max({fam.support_radius_, std::abs(sup.lo), std::abs(sup.hi)});
    fam.sup_bound_ = std::max(fam.sup_bound_, s.sup_value());
  }
  double acc = 0.0;
  for (double p : fam.probs_) fam.cumulative_.push_back(acc += p);
  fam.diagnostics_ = compute_diagnostics(fam, options.normalization_tolerance);
  if (options.enforce_normalization && !fam.diagnostics_.normalization_ok) {
    throw NormalizationError(fam.diagnostics_.messages.back());
  }
  return fam;
}

std::size_t ShapeFamily::sample_index(Rng& rng) const {
  if (shapes_.size() == 1) return 0;
  std::uniform_real_distribution<double> unif(0.0, cumulative_.back());
  const double target = unif(rng);
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  if (it == cumulative_.end()) --it;
  return static_cast<std::size_t>(it - cumulative_.begin());
}

FamilyDiagnostics validate_family(const ShapeFamily& family, std::optional<double> tolerance) {
  FamilyDiagnostics d =
      compute_diagnostics(family, tolerance.value_or(family.options().normalization_tolerance));
  if (!d.normalization_ok) {
    std::ostringstream os;
    os << "expected integral " << d.expected_integral << " is not 1 within " << d.tolerance;
    throw NormalizationError(os.str());
  }
  return d;
}

double eval_shape(const ShapeFamily& family, std::size_t shape_id, double x) {
  return family.value(shape_id, x);
}

double eval_shape_derivative(const ShapeFamily& family, std::size_t shape_id, double x) {
  return family.derivative(shape_id, x);
}

ShapeDescriptor smith_shape(double support_radius) {
  AnalyticShape s;
  s.name = "smith";
  s.value = [](double x) { return normal_pdf(x); };
  s.derivative = [](double x) { return -x * normal_pdf(x); };
  s.support_radius = support_radius;
  s.sup_value = normal_pdf(0.0);
  return ShapeDescriptor(std::move(s));
}

ShapeFamily build_smith_family(double support_radius) {
  return ShapeFamily::create({smith_shape(support_radius)}, {1.0});
}

// ---------------------------------------------------------------------------
// Brown-Resnick shapes

BrShapeConfig BrShapeConfig::uniform(double lo, double hi, double step) {
  if (!(step > 0.0) || lo > 0.0 || hi < 0.0) {
    throw InvalidArgument("Brown-Resnick grid must have positive step and contain 0");
  }
  const auto n_neg = static_cast<long>(std::llround(-lo / step));
  const auto n_pos = static_cast<long>(std::llround(hi / step));
  BrShapeConfig cfg;
  for (long k = -n_neg; k <= n_pos; ++k) cfg.grid.push_back(static_cast<double>(k) * step);
  if (cfg.grid.size() < 2) throw InvalidArgument("Brown-Resnick grid needs two points");
  return cfg;
}

double BrShapeConfig::spacing() const {
  double s = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) s = std::max(s, grid[k] - grid[k - 1]);
  return s;
}

double BrShapeConfig::radius() const {
  return std::max(std::abs(grid.front()), std::abs(grid.back()));
}

ShapeDescriptor sample_br_shape(const BrShapeConfig& config, Rng& rng) {
  const auto& grid = config.grid;
  auto zero = std::find(grid.begin(), grid.end(), 0.0);
  if (zero == grid.end()) throw InvalidArgument("Brown-Resnick grid must contain 0");
  const auto i0 = static_cast<std::size_t>(zero - grid.begin());

  std::vector<double> values(grid.size());
  values[i0] = 0.5;
  std::normal_distribution<double> normal(0.0, 1.0);

  auto walk = [&](auto begin_idx, auto step_idx, std::size_t count) {
    double w1 = 0.0, w2 = 0.0, w3 = 0.0, prev = 0.0;
    std::size_t idx = begin_idx;
    for (std::size_t c = 0; c < count; ++c) {
      idx = step_idx(idx);
      const double t = std::abs(grid[idx]);
      const double sd = std::sqrt(t - prev);
      w1 += sd * normal(rng);
      w2 += sd * normal(rng);
      w3 += sd * normal(rng);
      prev = t;
      const double d = w1 + 0.5 * t;
      values[idx] = 0.5 * std::exp(-std::sqrt(d * d + w2 * w2 + w3 * w3));
    }
  };
  walk(i0, [](std::size_t i) { return i - 1; }, i0);
  walk(i0, [](std::size_t i) { return i + 1; }, grid.size() - 1 - i0);
  return TabulatedShape(grid, std::move(values));
}

void sample_br_values(const BrShapeConfig& config, std::span<const double> offsets, Rng& rng,
                      std::span<double> out) {
  const auto& grid = config.grid;
  auto zero = std::lower_bound(grid.begin(), grid.end(), 0.0);
  if (zero == grid.end() || *zero != 0.0) throw InvalidArgument("Brown-Resnick grid must contain 0");
  const auto i0 = static_cast<std::size_t>(zero - grid.begin());

  std::vector<std::size_t> seg(offsets.size(), grid.size());
  std::vector<std::size_t> pos, neg;
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const double o = offsets[k];
    if (o < grid.front() || o > grid.back()) continue;
    auto it = std::upper_bound(grid.begin(), grid.end(), o);
    std::size_t j = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
    j = std::min(j, grid.size() - 2);
    seg[k] = j;
    for (std::size_t idx : {j, j + 1}) {
      if (idx > i0) pos.push_back(idx);
      if (idx < i0) neg.push_back(idx);
    }
  }
  std::sort(pos.begin(), pos.end());
  pos.erase(std::unique(pos.begin(), pos.end()), pos.end());
  std::sort(neg.begin(), neg.end(), std::greater<>());
  neg.erase(std::unique(neg.begin(), neg.end()), neg.end());

  std::vector<double> knot_value(grid.size(), 0.0);
  knot_value[i0] = 0.5;
  std::normal_distribution<double> normal(0.0, 1.0);
  auto walk = [&](const std::vector<std::size_t>& idxs) {
    double w1 = 0.0, w2 = 0.0, w3 = 0.0, prev = 0.0;
    for (std::size_t idx : idxs) {
      const double t = std::abs(grid[idx]);
      const double sd = std::sqrt(t - prev);
      w1 += sd * normal(rng);
      w2 += sd * normal(rng);
      w3 += sd * normal(rng);
      prev = t;
      const double d = w1 + 0.5 * t;
      knot_value[idx] = 0.5 * std::exp(-std::sqrt(d * d + w2 * w2 + w3 * w3));
    }
  };
  walk(neg);
  walk(pos);

  for (std::size_t k = 0; k < offsets.size(); ++k) {
    const std::size_t j = seg[k];
    if (j == grid.size()) {
      out[k] = 0.0;
      continue;
    }
    const double o = offsets[k];
    if (o == grid[j]) {
      out[k] = knot_value[j];
    } else if (o == grid[j + 1]) {
      out[k] = knot_value[j + 1];
    } else {
      const double w = (o - grid[j]) / (grid[j + 1] - grid[j]);
      out[k] = knot_value[j] + w * (knot_value[j + 1] - knot_value[j]);
    }
  }
}

ShapeFamily build_empirical_family(std::size_t n, const ShapeSampler& sampler, Rng& rng,
                                   bool enforce_normalization, double tolerance) {
  if (n == 0) throw InvalidCount("empirical family needs N >= 1 shapes");
  std::vector<ShapeDescriptor> shapes;
  shapes.reserve(n);
  for (std::size_t k = 0; k < n; ++k) shapes.push_back(sampler(rng));
  ShapeFamily::Options opt;
  opt.sampled = true;
  opt.normalization_tolerance = tolerance;
  opt.enforce_normalization = enforce_normalization;
  std::vector<double> probs(n, 1.0 / static_cast<double>(n));
  // Renormalize the rounding of 1/N so the probabilities sum to 1.
  double total = 0.0;
  for (double p : probs) total += p;
  probs.back() += 1.0 - total;
  return ShapeFamily::create(std::move(shapes), std::move(probs), opt);
}

// ---------------------------------------------------------------------------
// ShapeLaw

ShapeLaw::ShapeLaw(std::shared_ptr<const ShapeFamily> family) : family_(std::move(family)) {
  if (!family_) throw InvalidArgument("null shape family");
  sup_bound_ = family_->sup_bound();
  support_radius_ = family_->support_radius();
}

ShapeLaw::ShapeLaw(BrShapeConfig config) : br_(std::move(config)) {
  if (std::find(br_.grid.begin(), br_.grid.end(), 0.0) == br_.grid.end()) {
    throw InvalidArgument("Brown-Resnick grid must contain 0");
  }
  sup_bound_ = 0.5;
  support_radius_ = br_.radius();
}

// ---------------------------------------------------------------------------
// CSV

void write_tabulated_csv(std::ostream& os, const TabulatedShape& shape) {
  os << "x,value\n";
  os.precision(17);
  for (std::size_t k = 0; k < shape.knots().size(); ++k) {
    os << shape.knots()[k] << ',' << shape.values()[k] << '\n';
  }
}

TabulatedShape read_tabulated_csv(std::istream& is) {
  std::vector<double> xs, vs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw InvalidArgument("line " + std::to_string(lineno) + ": expected x,value");
    }
    try {
      std::size_t used = 0;
      const double x = std::stod(line.substr(0, comma), &used);
      const double v = std::stod(line.substr(comma + 1));
      xs.push_back(x);
      vs.push_back(v);
    } catch (const std::invalid_argument&) {
      if (lineno == 1) continue;  // header
      throw InvalidArgument("line " + std::to_string(lineno) + ": not numeric");
    }
  }
  return TabulatedShape(std::move(xs), std::move(vs));
}

}  // namespace m3
