#pragma once

// Moving maxima on the lattice pZ with finitely supported shapes: exact
// block weights, the equivalent max-linear model, a rejection oracle and the
// conditional sampler transplanted to the lattice.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "m3/core.hpp"
#include "m3/numerics.hpp"

namespace m3 {

/// f(p k) = values[k - offset] for k in [offset, offset + size), else 0.
struct LatticeShape {
  long offset = 0;
  std::vector<double> values;

  [[nodiscard]] double at(long k) const {
    const long j = k - offset;
    return j >= 0 && j < static_cast<long>(values.size()) ? values[static_cast<std::size_t>(j)]
                                                          : 0.0;
  }
};

struct LatticeSpec {
  double pitch = 1.0;
  long lo = 0;  // atom locations p m, m in [lo, hi]
  long hi = 0;
  std::vector<LatticeShape> shapes;
  std::vector<double> probs;

  /// Throws InvalidArgument on malformed input and NormalizationError when
  /// sum_f P_F(f) sum_k f(p k) misses 1 by more than `tolerance`.
  void validate(double tolerance = 1e-9) const;
  /// Lattice index of t; OffLatticeError when t is not on pZ.
  [[nodiscard]] long index_of(double t) const;
};

/// A lattice atom (p m, y, f) and its intensity coefficient.
struct LatticeHit {
  long m = 0;
  std::size_t shape_id = 0;
  double y = 0.0;
  double weight = 0.0;
};

struct DiscreteBlock {
  std::vector<std::size_t> members;
  std::vector<LatticeHit> hits;
  double weight = 0.0;
};

struct DiscreteScenario {
  std::vector<std::size_t> blocks;
  double weight = 0.0;
  double prob = 0.0;
};

struct DiscreteBlocks {
  std::vector<DiscreteBlock> blocks;
  std::vector<DiscreteScenario> scenarios;  // partitions with the fewest blocks
};

/// Singleton weight sum f(t_i - x)/z_i P_F(f) over the lattice atoms where i
/// is the unique minimizer; block weight sum (1/y) P_F(f) over exact hits.
DiscreteBlocks discrete_blocks(const LatticeSpec& spec, const Observations& obs,
                               double rel_tol = 1e-9);

struct MaxLinearMatrix {
  std::vector<std::pair<long, std::size_t>> columns;  // (m, shape)
  std::vector<std::vector<double>> rows;              // a[i][column]
};

/// a[i][(m, f)] = f(t_i - p m) P_F(f).
MaxLinearMatrix maxlinear_coefficients(const LatticeSpec& spec, std::span<const double> sites);

struct DiscreteDraw {
  std::vector<double> values;
  std::vector<std::pair<long, std::size_t>> generator;  // (m, shape) attaining each value
};

/// Largest atom per (m, f) is P_F(f) / E with E standard exponential.
DiscreteDraw simulate_discrete(const LatticeSpec& spec, std::span<const double> sites, Rng& rng);

struct DiscreteSample {
  EmpiricalPredictive predictive;
  std::vector<std::string> labels;  // generators of the observations and of t0
  std::size_t trials = 0;
};

/// Unconditional draws accepted when z_i < Z(t_i) <= z_i (1 + delta) for all i.
/// Throws AcceptanceTooLow when the acceptance rate drops below 1e-6 after
/// 10^6 trials or `max_trials` is reached.
DiscreteSample rejection_oracle(const LatticeSpec& spec, const Observations& obs, double delta,
                                double t0, std::size_t n_accepted, Rng& rng,
                                std::size_t max_trials = std::size_t{1} << 34);

/// Conditional draws of Z(t0): scenario among fewest-block partitions, one
/// lattice hit per block, free atoms strictly below the curves.
DiscreteSample discrete_condition(const LatticeSpec& spec, const Observations& obs, double t0,
                                  std::size_t n_draws, Rng& rng);

}  // namespace m3
