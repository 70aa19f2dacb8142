#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hazret/montecarlo.hpp"

namespace hazret {

// Interval maps on (0,1) with exact invariant measures: the doubling map
// with Lebesgue measure and the continued-fraction map with density
// 1/(ln 2 (1+x)). digit_cap bounds the branches a Gauss partition may use.
enum class MapKind { Doubling, Gauss };

struct IntervalMapModel {
  MapKind kind = MapKind::Doubling;
  std::uint32_t digit_cap = 64;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Disjoint intervals sorted by left endpoint.
struct IntervalSet {
  std::vector<Interval> parts;
};

struct BallSpec {
  double x = 0.0;
  double r = 0.0;
};

double interval_measure(const IntervalMapModel& map, double lo, double hi);
double set_measure(const IntervalMapModel& map, const IntervalSet& s);

// Membership in a sorted disjoint union, intervals read as [lo, hi).
bool set_contains(const IntervalSet& s, double z);

// Half-open ball [x-r, x+r) clipped to (0,1).
Interval ball_interval(double x, double r);

// The n-th join of the map's natural partition, as sorted intervals covering
// (0,1) up to measure zero. Gauss cells with a digit beyond the cap stay
// whole (one overflow wedge per prefix). Throws when the cell count would
// exceed 2e6.
struct PartitionResult {
  std::vector<Interval> cells;
  double max_diameter = 0.0;
};

PartitionResult partition_level(const IntervalMapModel& map, std::size_t n);

// Inner and outer cylinder approximations of a ball: the union of level-k
// cells contained in it, and of those meeting it. The inner union may be
// empty when k is too coarse.
IntervalSet approx_minus(const IntervalMapModel& map, double x, double r, std::size_t k);
IntervalSet approx_plus(const IntervalMapModel& map, double x, double r, std::size_t k);

// Approximation level for a target radius, from the partition diameter law.
struct ApproxConfig {
  enum class DiameterLaw { Polynomial, Exponential } law = DiameterLaw::Polynomial;
  double w = 2.0;     // oversampling exponent, > 1
  double p = 1.0;     // polynomial decay exponent (diam ~ n^-p)
  double rate = 1.0;  // exponential decay rate (diam ~ e^{-rate n})
};

std::size_t n_of_r(double r, const ApproxConfig& cfg);

// Hazard share of the hit intensity between two disjoint interior balls.
double rho_balls(const IntervalMapModel& map, const BallSpec& target, const BallSpec& hazard);
double rho_balls(const IntervalMapModel& map, double x, double y, double r);

// Empirical law of the number of visits to the ball at x strictly before
// the first visit to the ball at y, from stationary starts. Doubling orbits
// are exact symbol streams read through 64-bit windows, so a ball that is
// exactly a dyadic cylinder union reproduces the symbolic count path by
// path at equal seeds.
SimulateResult sigma_balls(const IntervalMapModel& map, double x, double y, double r,
                           std::size_t n_samples, std::size_t horizon, std::uint64_t seed,
                           unsigned threads = 1);

// First-entry times tau(r) = min{k >= 1: T^k(start) in B_r(center)} along one
// orbit, over a strictly decreasing radius schedule. Without an explicit
// center the experiment measures returns to the start itself. The slope of
// log tau against -log r estimates the recurrence exponent; the minimum over
// suffix fits is reported as the lower (liminf-style) estimate. Radii whose
// entry time exceeds the horizon are dropped from the tail and counted.
struct RecurrenceReport {
  std::vector<double> radii;
  std::vector<std::uint64_t> taus;
  double slope = 0.0;
  double min_suffix_slope = 0.0;
  std::size_t truncated = 0;
};

RecurrenceReport recurrence_rate_estimate(const IntervalMapModel& map, double start,
                                          std::optional<double> center,
                                          const std::vector<double>& r_schedule,
                                          std::size_t horizon, std::uint64_t seed);

}  // namespace hazret
