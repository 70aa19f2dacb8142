#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "hazret/pmf.hpp"

using namespace hazret;

namespace {

// Independent oracle for d_TV(Geo(a), Geo(b)), a < b: the pmf ratio is
// monotone, so the laws cross once and the distance telescopes to a
// difference of tail powers at the crossing index.
double dtv_geo_closed(double a, double b) {
  if (a > b) std::swap(a, b);
  if (a == b) return 0.0;
  const double kstar = std::floor(std::log(a / b) / std::log((1 - b) / (1 - a)));
  const double k1 = std::max(kstar, 0.0) + 1.0;
  return std::pow(1 - a, k1) - std::pow(1 - b, k1);
}

}  // namespace

TEST_CASE("geo_pmf closed form") {
  const Pmf g = geo_pmf(0.5, 1);
  REQUIRE(g.probs.size() == 2);
  CHECK(g.probs[0] == 0.5);
  CHECK(g.probs[1] == 0.25);
  CHECK(g.tail == 0.25);

  const Pmf spike = geo_pmf(1 - 1e-15, 3);
  CHECK(spike.probs[0] == doctest::Approx(1.0).epsilon(1e-14));

  for (double rho : {0.05, 0.3, 0.8, 0.999})
    for (std::size_t K : {std::size_t{0}, std::size_t{7}, std::size_t{500}}) {
      const Pmf p = geo_pmf(rho, K);
      double sum = p.tail;
      for (double v : p.probs) sum += v;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }

  CHECK_THROWS_AS(geo_pmf(0.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(geo_pmf(1.0, 3), std::invalid_argument);
}

TEST_CASE("pmf validation") {
  CHECK_NOTHROW(validate_pmf(Pmf{{0.5, 0.5}, 0.0}));
  CHECK_THROWS_AS(validate_pmf(Pmf{{0.5, -0.1, 0.6}, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate_pmf(Pmf{{0.5, 0.4}, 0.2}), std::invalid_argument);
  CHECK_THROWS_AS(validate_pmf(Pmf{{0.5, 0.6}, -0.1}), std::invalid_argument);
}

TEST_CASE("tv_distance basics") {
  const Pmf p = geo_pmf(0.5, 10);
  const auto same = tv_distance(p, p);
  CHECK(same.lower == 0.0);
  CHECK(same.upper == p.tail);

  // Point mass at 0 vs Geo(0.5) with a long support.
  const Pmf point{{1.0}, 0.0};
  const auto d = tv_distance(point, geo_pmf(0.5, 60));
  CHECK(d.lower == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(d.upper == doctest::Approx(0.5).epsilon(1e-9));

  // Symmetry is exact, including zero-padding across unequal supports.
  const Pmf q = geo_pmf(0.3, 25);
  const auto ab = tv_distance(p, q);
  const auto ba = tv_distance(q, p);
  CHECK(ab.lower == ba.lower);
  CHECK(ab.upper == ba.upper);
  CHECK(ab.lower <= ab.upper);
}

TEST_CASE("tv_distance between geometrics matches the crossing oracle") {
  {
    const auto d = tv_distance(geo_pmf(0.4, 200), geo_pmf(0.6, 200));
    CHECK(d.upper - d.lower <= 1e-10);
    // Crossing at k*=1: distance = 0.6^2 - 0.4^2 = 0.2.
    CHECK(d.lower == doctest::Approx(0.2).epsilon(1e-12));
    double s = 0.0;  // brute-force positive-part summation
    for (int k = 0; k <= 2000; ++k) {
      const double pa = 0.4 * std::pow(0.6, k);
      const double pb = 0.6 * std::pow(0.4, k);
      s += std::max(pb - pa, 0.0);
    }
    CHECK(d.lower == doctest::Approx(s).epsilon(1e-12));
  }
  for (double a : {0.15, 0.3, 0.5, 0.75})
    for (double b : {0.15, 0.3, 0.5, 0.75}) {
      const auto d = tv_distance(geo_pmf(a, 800), geo_pmf(b, 800));
      CHECK(d.lower == doctest::Approx(dtv_geo_closed(a, b)).epsilon(1e-10));
    }
}

TEST_CASE("tv_distance lower estimates satisfy the triangle inequality up to tail slack") {
  const Pmf p = geo_pmf(0.12, 30);
  const Pmf q = geo_pmf(0.35, 30);
  const Pmf r = geo_pmf(0.7, 30);
  const double d_pr = tv_distance(p, r).lower;
  const double d_pq = tv_distance(p, q).lower;
  const double d_qr = tv_distance(q, r).lower;
  CHECK(d_pr <= d_pq + d_qr + p.tail + 2 * q.tail + r.tail + 1e-15);
}
