#pragma once

#include <cstddef>
#include <vector>

namespace hazret {

// Mass function on {0,1,...} truncated at K = probs.size()-1, with the mass
// beyond K folded into an explicit tail term.
struct Pmf {
  std::vector<double> probs;
  double tail = 0.0;
};

// Throws std::invalid_argument unless all entries and the tail are
// nonnegative and total mass is 1 within 1e-9.
void validate_pmf(const Pmf& p);

// Geometric law: mass rho*(1-rho)^k at k for k <= K, tail (1-rho)^{K+1}.
Pmf geo_pmf(double rho, std::size_t K);

// Enclosure of the total variation distance between truncated pmfs. Finite
// supports are zero-padded to the longer one. The unseen beyond-K part
// contributes at least |tail_p - tail_q| and at most tail_p + tail_q, so
// the true distance lies in [lower, upper].
struct TvInterval {
  double lower = 0.0;
  double upper = 0.0;
};

TvInterval tv_distance(const Pmf& p, const Pmf& q);

}  // namespace hazret
