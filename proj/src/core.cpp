#include "hazret/core.hpp"

#include <algorithm>
#include <stdexcept>

namespace hazret {

namespace {

bool equal_range(const Word& a, std::size_t a_off, const Word& b, std::size_t b_off,
                 std::size_t len) {
  for (std::size_t i = 0; i < len; ++i)
    if (a[a_off + i] != b[b_off + i]) return false;
  return true;
}

// Some word of `left` shifted by k agrees with some word of `right` on
// t = min(left_len - k, right_len) positions; caller guarantees t >= 1.
bool shifted_match(const CylinderUnion& left, const CylinderUnion& right, std::size_t k) {
  const std::size_t t = std::min(left.word_length() - k, right.word_length());
  for (const Word& a : left.words())
    for (const Word& b : right.words())
      if (equal_range(a, k, b, 0, t)) return true;
  return false;
}

}  // namespace

std::size_t self_overlap_lag(const CylinderUnion& U) {
  const std::size_t n = U.word_length();
  for (std::size_t k = 1; k < n; ++k)
    if (shifted_match(U, U, k)) return k;
  return n;
}

std::optional<std::size_t> cross_overlap_lag(const CylinderUnion& U, const CylinderUnion& V) {
  if (U.alphabet_size() != V.alphabet_size())
    throw std::invalid_argument("cross_overlap_lag: alphabet mismatch");
  const std::size_t n = U.word_length(), m = V.word_length();
  for (std::size_t k = 0; k <= std::min(n, m); ++k) {
    if (k < n && shifted_match(U, V, k)) return k;
    if (k < m && shifted_match(V, U, k)) return k;
  }
  return std::nullopt;
}

std::size_t overlap_lag(const CylinderUnion& U, const CylinderUnion& V) {
  std::size_t best = std::min(self_overlap_lag(U), self_overlap_lag(V));
  if (const auto cross = cross_overlap_lag(U, V))
    best = std::min(best, *cross);
  return best;
}

HitStats tau_and_sigma(std::span<const Symbol> orbit, const CylinderUnion& U,
                       const CylinderUnion& V, TauConvention convention,
                       std::size_t horizon) {
  const std::size_t n = U.word_length(), m = V.word_length();
  if (U.alphabet_size() != V.alphabet_size())
    throw std::invalid_argument("tau_and_sigma: alphabet mismatch");
  if (orbit.size() < horizon + std::max(n, m))
    throw std::invalid_argument("tau_and_sigma: orbit shorter than horizon + window");

  const std::size_t first_v = (convention == TauConvention::FromOne) ? 1 : 0;
  std::size_t sigma = 0;
  for (std::size_t k = 0; k <= horizon; ++k) {
    if (k >= first_v && V.contains(orbit.subspan(k, m)))
      return HitStats{false, k, sigma};
    if (U.contains(orbit.subspan(k, n))) ++sigma;
  }
  return HitStats{true, 0, 0};
}

CylinderUnion shift_set(const CylinderUnion& U, std::size_t r) {
  const std::size_t n = U.word_length();
  if (r >= n) throw std::invalid_argument("shift_set: shift must be < word length");
  std::vector<Word> out;
  out.reserve(U.size());
  for (const Word& w : U.words()) out.emplace_back(w.begin() + r, w.end());
  return CylinderUnion(std::move(out), U.alphabet_size());
}

}  // namespace hazret
