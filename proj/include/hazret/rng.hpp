#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace hazret {

// splitmix64 finalizer; used to decorrelate per-path seeds from (master, index).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master ^ mix64(index + 1));
}

// Deterministic uniform source. mt19937_64 output is fixed by the standard,
// and the [0,1) mapping below is exact integer arithmetic, so streams are
// bit-identical across platforms. std::uniform_real_distribution is
// implementation-defined and deliberately not used anywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // 53-bit uniform in [0,1).
  double next_double() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Inverse-CDF draw against a cumulative weight vector (cum.back() ~ 1).
  // Returns the least i with u < cum[i]; the last index absorbs rounding.
  std::size_t sample_cumulative(std::span<const double> cum) {
    const double u = next_double();
    std::size_t lo = 0, hi = cum.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (u < cum[mid]) hi = mid; else lo = mid + 1;
    }
    return lo;
  }

 private:
  std::mt19937_64 gen_;
};

inline std::vector<double> cumulative(std::span<const double> w) {
  std::vector<double> cum(w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    cum[i] = acc;
  }
  return cum;
}

}  // namespace hazret
