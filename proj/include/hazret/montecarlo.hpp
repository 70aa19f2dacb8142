#pragma once

#include <cstdint>
#include <vector>

#include "hazret/core.hpp"
#include "hazret/measures.hpp"
#include "hazret/pmf.hpp"
#include "hazret/word.hpp"

namespace hazret {

// Empirical law of the return count from independent stationary paths.
// probs are conditional on the paths whose hazard hit fell inside the
// horizon; censored paths are counted, never imputed.
struct SimulateResult {
  Pmf empirical;
  std::size_t censored = 0;
  std::size_t samples = 0;
  bool flagged = false;  // censored fraction above 10%
};

// Horizon sized for roughly percent-level censoring at hazard measure pV.
std::size_t default_horizon(double pV);

// Each path seeds its own generator from (seed, path index), and histograms
// merge by integer addition, so the result is identical for any thread
// count. Path i of a run is reproducible in isolation.
SimulateResult simulate_sigma(const ProcessModel& model, const CylinderUnion& U,
                              const CylinderUnion& V, std::size_t n_samples,
                              std::size_t horizon, std::uint64_t seed,
                              TauConvention convention, unsigned threads = 1);

// How the hazard word length follows the return word length in the
// cylinder trend experiment.
enum class HazardLengthRule {
  MatchLength,   // m(n) = n
  MatchMeasure,  // choose m so the hazard cylinder measure tracks the return's
};

struct TrendPoint {
  std::size_t n = 0;
  std::size_t m = 0;
  Word u_word, v_word;
  double pU = 0.0, pV = 0.0, rho = 0.0;
  TvInterval tv;  // empirical law vs Geo(rho)
  std::size_t censored = 0, samples = 0, resamples = 0;
  bool flagged = false;
};

// One experiment point for explicitly chosen words (u strictly the return
// target, v the hazard). Throws if either cylinder has zero measure or one
// word is a prefix of the other (the lifted sets would intersect).
TrendPoint cylinder_trend_point(const ProcessModel& model, const Word& u_word,
                                const Word& v_word, std::size_t n_samples,
                                std::uint64_t seed, unsigned threads = 1);

// Trend over a schedule of return word lengths with model-typical words:
// both words are sampled from the model itself, resampling (with a reported
// count) whenever a draw is degenerate for the experiment.
std::vector<TrendPoint> cylinder_trend_experiment(
    const ProcessModel& model, const std::vector<std::size_t>& n_schedule,
    HazardLengthRule rule, std::size_t n_samples, std::uint64_t seed,
    unsigned threads = 1);

}  // namespace hazret
