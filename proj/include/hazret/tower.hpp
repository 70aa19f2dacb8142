#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "hazret/measures.hpp"
#include "hazret/montecarlo.hpp"

namespace hazret {

// Height of the column above each base point, constant on length-s prefix
// cells so that the mean roof, floor masses, and size-biased sampling are
// finite sums. values is indexed by the base-alphabet code of the prefix.
struct RoofFunction {
  std::size_t prefix_len = 1;
  std::vector<std::uint32_t> values;
};

RoofFunction constant_roof(const ProcessModel& model, std::uint32_t height);

// Discrete-time suspension of a base process: the point (x, j) steps up its
// column until the roof and then drops to (shifted x, 0). The invariant law
// weights a base cell by its roof height, normalized by the mean roof.
class TowerModel {
 public:
  TowerModel(ProcessModel base, RoofFunction roof);

  const ProcessModel& base() const { return base_; }
  const RoofFunction& roof() const { return roof_; }
  std::size_t prefix_len() const { return roof_.prefix_len; }
  std::size_t cell_count() const { return cell_measure_.size(); }
  std::uint64_t alphabet() const { return alphabet_; }
  double mean_roof() const { return mean_roof_; }
  std::uint32_t max_roof() const { return max_roof_; }

  double cell_measure(std::size_t code) const;     // base law of the prefix cell
  std::uint32_t roof_at(std::size_t code) const;
  Word cell_word(std::size_t code) const;

  // Lifted mass of the k-th floor; zero at or above the tallest column.
  double floor_mass(std::size_t k) const;

  // One draw from the lifted law: cell with probability proportional to
  // measure times roof, level uniform below the cell's roof. The level draw
  // consumes a uniform only when the cell's roof exceeds one.
  std::pair<std::size_t, std::uint32_t> draw_cell_level(Rng& rng) const;

 private:
  ProcessModel base_;
  RoofFunction roof_;
  std::uint64_t alphabet_ = 0;
  std::vector<double> cell_measure_;
  std::vector<double> size_biased_cum_;
  std::vector<double> floor_mass_;
  double mean_roof_ = 0.0;
  std::uint32_t max_roof_ = 0;
};

// Position along a materialized base orbit: the symbol window starting at
// base_index is the current base point.
struct TowerPoint {
  std::size_t base_index = 0;
  std::uint32_t level = 0;
};

TowerPoint tower_step(const TowerModel& tower, const TowerPoint& p,
                      std::span<const Symbol> base_orbit);

struct TowerSample {
  Word cell;
  std::uint32_t level = 0;
};

TowerSample sample_tower_point(const TowerModel& tower, std::uint64_t seed);

// A base cylinder union placed on one floor. Single-floor lifts meet every
// base column at most once, so they are always well placed.
struct TowerSet {
  CylinderUnion base;
  std::uint32_t level;
};

// Checks cell-wise that the floor exists over every covered cell.
TowerSet lift_set(const TowerModel& tower, const CylinderUnion& base_set, std::uint32_t level);

// Law of the number of visits to U strictly before the first (time >= 1)
// visit to V, along tower orbits started from the lifted invariant law.
// The visit at time zero counts toward U. Projections of U and V to the
// base must be disjoint. Censoring as in simulate_sigma.
SimulateResult sigma_tower(const TowerModel& tower, const TowerSet& U, const TowerSet& V,
                           std::size_t n_samples, std::size_t horizon, std::uint64_t seed,
                           unsigned threads = 1);

// One sampled orbit, counted twice along the same tower trajectory: against
// (U, V) and against their floor-zero copies. The counts match, with two
// exceptions tied to the start. A start strictly above floor zero, at or
// below its column's target point, meets U once before the first floor-zero
// passage: one extra tower visit. A start strictly below its column's hazard
// point meets V before any floor-zero copy can fire: the tower count is
// zero there regardless of the floor-zero count. holds records whether the
// realized counts obey this, and is false whenever censoring intervenes.
struct TransferReport {
  bool censored = false;
  bool start_above_target = false;  // extra-visit configuration
  bool start_below_hazard = false;  // early-stop configuration
  std::uint64_t tower_count = 0;
  std::uint64_t base_count = 0;
  bool holds = false;
  Word start_cell;
  std::uint32_t start_level = 0;
};

TransferReport count_transfer_check(const TowerModel& tower, const TowerSet& U,
                                    const TowerSet& V, std::size_t horizon,
                                    std::uint64_t seed);

}  // namespace hazret
