#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <vector>

#include "hazret/core.hpp"
#include "hazret/rng.hpp"
#include "test_util.hpp"

using namespace hazret;
using testutil::CU;
using testutil::W;

namespace {

// Independent re-scan: counts U-windows strictly before the first admissible
// V-window by direct word comparison, no shared code with tau_and_sigma.
HitStats brute_force_scan(const std::vector<Symbol>& orbit, const CylinderUnion& U,
                          const CylinderUnion& V, TauConvention conv, std::size_t horizon) {
  const std::size_t n = U.word_length(), m = V.word_length();
  auto window_in = [&](const CylinderUnion& S, std::size_t k, std::size_t len) {
    for (const Word& w : S.words()) {
      bool ok = true;
      for (std::size_t i = 0; i < len && ok; ++i) ok = (orbit[k + i] == w[i]);
      if (ok) return true;
    }
    return false;
  };
  std::size_t tau = horizon + 1;
  for (std::size_t k = (conv == TauConvention::FromOne ? 1 : 0); k <= horizon; ++k) {
    if (window_in(V, k, m)) { tau = k; break; }
  }
  if (tau == horizon + 1) return HitStats{true, 0, 0};
  std::size_t sigma = 0;
  for (std::size_t j = 0; j < tau; ++j)
    if (window_in(U, j, n)) ++sigma;
  return HitStats{false, tau, sigma};
}

std::vector<Symbol> random_orbit(Rng& rng, std::size_t len, std::size_t alphabet) {
  std::vector<Symbol> o(len);
  for (auto& s : o) s = static_cast<Symbol>(rng.next_u64() % alphabet);
  return o;
}

}  // namespace

TEST_CASE("cylinder union validation") {
  CHECK_THROWS_AS(CylinderUnion({}, 2), std::invalid_argument);
  CHECK_THROWS_AS(CylinderUnion({W("01"), W("0")}, 2), std::invalid_argument);
  CHECK_THROWS_AS(CylinderUnion({W("02")}, 2), std::invalid_argument);
  CHECK_THROWS_AS(CylinderUnion({W("")}, 2), std::invalid_argument);
  const auto u = CU({"01", "01", "11"});
  CHECK(u.size() == 2);  // duplicates removed
  CHECK(u.contains(W("01")));
  CHECK(u.contains(W("11")));
  CHECK(!u.contains(W("10")));
  CHECK(!u.contains(W("011")));
}

TEST_CASE("membership agrees between encoded and fallback paths") {
  // Alphabet 3, length 45: 3^45 > 2^62, so the fallback path is active.
  Word long_a(45, 0), long_b(45, 0);
  long_b[44] = 2;
  CylinderUnion big({long_a, long_b}, 3);
  CHECK(!big.encodable());
  CHECK(big.contains(long_a));
  CHECK(big.contains(long_b));
  Word other = long_a;
  other[0] = 1;
  CHECK(!big.contains(other));

  CylinderUnion small({W("012")}, 3);
  CHECK(small.encodable());
  CHECK(small.contains(W("012")));
}

TEST_CASE("self overlap lag") {
  CHECK(self_overlap_lag(CU({"01"})) == 2);
  CHECK(self_overlap_lag(CU({"00"})) == 1);
  CHECK(self_overlap_lag(CU({"0101"})) == 2);
  // Full word set at a given length: every overlap is realizable.
  CHECK(self_overlap_lag(CU({"00", "01", "10", "11"})) == 1);
}

TEST_CASE("cross overlap lag") {
  CHECK(cross_overlap_lag(CU({"01"}), CU({"10"})) == 1);
  CHECK(cross_overlap_lag(CU({"00"}), CU({"00"})) == 0);
  CHECK(!cross_overlap_lag(CU({"000"}), CU({"111"})).has_value());
  CHECK_THROWS_AS(cross_overlap_lag(CU({"01"}), CU({"01"}, 3)), std::invalid_argument);
}

TEST_CASE("overlap lag (kappa)") {
  CHECK(overlap_lag(CU({"01"}), CU({"10"})) == 1);
  CHECK(overlap_lag(CU({"000"}), CU({"111"})) == 1);
  CHECK(overlap_lag(CU({"0101"}), CU({"1010"})) == 1);
}

TEST_CASE("tau and sigma examples") {
  const std::vector<Symbol> orbit = {0, 1, 1, 0, 1, 0, 0, 1};
  const auto u = CU({"01"});
  const auto v = CU({"10"});

  auto h = tau_and_sigma(orbit, u, v, TauConvention::FromZero, 6);
  CHECK(!h.censored);
  CHECK(h.tau == 2);
  CHECK(h.sigma == 1);

  // Orbit starting inside V: immediate hit, empty count.
  const std::vector<Symbol> at_v = {1, 0, 1, 0, 0};
  h = tau_and_sigma(at_v, u, v, TauConvention::FromZero, 3);
  CHECK(h.tau == 0);
  CHECK(h.sigma == 0);

  // Same orbit, hit search from index 1: the index-0 window is skipped for tau
  // but indices 0 <= j < tau still count for sigma.
  h = tau_and_sigma(at_v, u, v, TauConvention::FromOne, 3);
  CHECK(h.tau == 2);
  CHECK(h.sigma == 1);

  const std::vector<Symbol> never = {0, 0, 0, 0, 0, 0};
  h = tau_and_sigma(never, u, v, TauConvention::FromZero, 4);
  CHECK(h.censored);

  CHECK_THROWS_AS(tau_and_sigma(never, u, v, TauConvention::FromZero, 5),
                  std::invalid_argument);
}

TEST_CASE("tau and sigma matches brute force on random orbits") {
  Rng rng(20260819ull);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t alphabet = 2 + rng.next_u64() % 2;
    const std::size_t n = 1 + rng.next_u64() % 3;
    const std::size_t m = 1 + rng.next_u64() % 3;
    auto rand_set = [&](std::size_t len) {
      std::vector<Word> ws;
      const std::size_t count = 1 + rng.next_u64() % 2;
      for (std::size_t i = 0; i < count; ++i) {
        Word w(len);
        for (auto& s : w) s = static_cast<Symbol>(rng.next_u64() % alphabet);
        ws.push_back(w);
      }
      return CylinderUnion(std::move(ws), alphabet);
    };
    const auto u = rand_set(n);
    const auto v = rand_set(m);
    const std::size_t horizon = 40;
    const auto orbit = random_orbit(rng, horizon + std::max(n, m), alphabet);
    for (auto conv : {TauConvention::FromZero, TauConvention::FromOne}) {
      const auto a = tau_and_sigma(orbit, u, v, conv, horizon);
      const auto b = brute_force_scan(orbit, u, v, conv, horizon);
      CHECK(a.censored == b.censored);
      if (!a.censored) {
        CHECK(a.tau == b.tau);
        CHECK(a.sigma == b.sigma);
        CHECK(a.sigma <= a.tau);
      }
    }
  }
}

TEST_CASE("shift set") {
  auto s1 = shift_set(CU({"011"}), 1);
  CHECK(s1.words() == std::vector<Word>{W("11")});
  auto s2 = shift_set(CU({"01", "00"}), 1);
  CHECK(s2.size() == 2);
  auto s3 = shift_set(CU({"01", "11"}), 1);
  CHECK(s3.words() == std::vector<Word>{W("1")});
  CHECK_THROWS_AS(shift_set(CU({"01"}), 2), std::invalid_argument);

  // Composition: shifting twice equals shifting by the sum.
  const auto base = CU({"01011", "11010", "00110"});
  const auto once = shift_set(shift_set(base, 1), 2);
  const auto direct = shift_set(base, 3);
  CHECK(once.words() == direct.words());
}
