#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include "hazret/word.hpp"

namespace hazret {

// Hitting-time convention: the hazard hit is searched from index 0 (default)
// or from index 1. The visit count always runs over indices 0 <= j < tau.
enum class TauConvention { FromZero, FromOne };

struct HitStats {
  bool censored = false;
  std::size_t tau = 0;    // valid iff !censored
  std::size_t sigma = 0;  // valid iff !censored; sigma <= tau
};

// Least k in [1, n] such that some word of U shifted left by k matches a
// prefix of some word of U on the remaining n-k positions. k = n is vacuous
// and always qualifies, so the result exists.
std::size_t self_overlap_lag(const CylinderUnion& U);

// Least k in [0, min(n,m)] such that, in either direction, a word of one set
// shifted left by k agrees with a word of the other set on their (nonempty)
// shared positions. Empty candidate set yields nullopt.
std::optional<std::size_t> cross_overlap_lag(const CylinderUnion& U, const CylinderUnion& V);

// min over {cross_overlap_lag(U,V), self_overlap_lag(U), self_overlap_lag(V)},
// ignoring an empty cross lag.
std::size_t overlap_lag(const CylinderUnion& U, const CylinderUnion& V);

// Scans the orbit's sliding windows: tau is the least admissible index whose
// V-window hits, sigma counts U-windows strictly before tau. Requires
// orbit.size() >= horizon + max(word lengths); censored if no hit at k <= horizon.
HitStats tau_and_sigma(std::span<const Symbol> orbit, const CylinderUnion& U,
                       const CylinderUnion& V, TauConvention convention,
                       std::size_t horizon);

// Drops the first r symbols of every word, deduplicating. Requires r < length.
CylinderUnion shift_set(const CylinderUnion& U, std::size_t r);

}  // namespace hazret
