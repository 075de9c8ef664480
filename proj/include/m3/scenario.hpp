#pragma once

// Feasible blocks, scenario enumeration with limiting probabilities, and
// sampling of the atoms that generate the observations.

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "m3/core.hpp"
#include "m3/geometry.hpp"
#include "m3/numerics.hpp"

namespace m3 {

/// Index set generated by a single atom.
struct Block {
  std::vector<std::size_t> members;             // sorted
  std::vector<CandidatePoint> candidates;       // blocks of size >= 2
  std::vector<RegionIntegralResult> regions;    // singleton blocks
  double weight = 0.0;
  bool forced = false;                          // size >= 3
  bool exact = true;                            // all members meet within root tolerance
};

struct BlockSet {
  std::size_t n = 0;
  std::vector<Block> blocks;
  std::vector<std::string> diagnostics;
};

/// Singletons with positive weight, pairs with summed candidate weights and
/// tolerance-grouped blocks of size >= 3 (forced). Only maximal forced blocks
/// are kept; overlapping maximal forced blocks raise ConflictError.
BlockSet enumerate_feasible_blocks(const Envelope& env, double epsilon);

/// Drops forced blocks contained in other forced blocks and throws
/// ConflictError if two remaining forced blocks share an index.
void check_forced_conflicts(BlockSet& set);

struct Scenario {
  std::vector<std::size_t> blocks;  // indices into BlockSet::blocks
  double weight = 0.0;
  double prob = 0.0;
};

/// Forced blocks in every scenario with factor 1; the remaining indices are
/// partitioned in every way into feasible pairs and singletons.
std::vector<Scenario> enumerate_scenarios(const BlockSet& set, std::size_t max_free = 12);

/// prob = weight / sum of weights.
std::vector<Scenario> scenario_probabilities(std::vector<Scenario> scenarios);

/// Normalized candidate probabilities of a block computed from the pair
/// (a, b) of its members.
std::vector<double> candidate_probabilities(const Block& block, std::size_t a, std::size_t b,
                                            const Observations& obs, const ShapeFamily& family,
                                            const Tolerances& tol);

/// Throws LabellingError if the candidate law of an exact block with at least
/// three members and two candidates depends on the labelling (three labellings).
void check_labelling_invariance(const Block& block, const Observations& obs,
                                const ShapeFamily& family, const Tolerances& tol);

/// Step 1 of the conditional procedure, cached: blocks, scenarios with
/// probabilities and inverse-CDF tables of every singleton region.
class ScenarioTable {
 public:
  ScenarioTable(std::shared_ptr<const Envelope> env, double epsilon);

  [[nodiscard]] const Envelope& envelope() const noexcept { return *env_; }
  [[nodiscard]] const BlockSet& blocks() const noexcept { return blocks_; }
  [[nodiscard]] const std::vector<Scenario>& scenarios() const noexcept { return scenarios_; }
  [[nodiscard]] double epsilon() const noexcept { return epsilon_; }

  [[nodiscard]] std::size_t sample_scenario(Rng& rng) const;
  /// One atom per block of the scenario.
  [[nodiscard]] std::vector<Atom> sample_generators(std::size_t scenario, Rng& rng) const;

 private:
  struct SingletonTables {
    std::vector<std::size_t> shapes;
    std::vector<double> shape_weights;
    std::vector<PiecewiseLinearSampler> samplers;
  };

  std::shared_ptr<const Envelope> env_;
  double epsilon_ = 0.0;
  BlockSet blocks_;
  std::vector<Scenario> scenarios_;
  std::vector<double> probs_;
  std::vector<SingletonTables> singleton_tables_;  // per block, empty unless singleton
};

}  // namespace m3
