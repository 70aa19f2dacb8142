#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "hazret/balls.hpp"
#include "hazret/measures.hpp"
#include "hazret/pmf.hpp"
#include "hazret/rng.hpp"

using namespace hazret;

namespace {

const IntervalMapModel kDoubling{MapKind::Doubling, 64};
const IntervalMapModel kGauss{MapKind::Gauss, 64};

Word word_of_code(std::uint64_t code, std::size_t len) {
  Word w(len);
  for (std::size_t i = len; i-- > 0;) {
    w[i] = static_cast<Symbol>(code % 2);
    code /= 2;
  }
  return w;
}

// All length-len binary words whose dyadic cylinder lies inside [lo, hi).
std::vector<Word> dyadic_words(double lo, double hi, std::size_t len) {
  std::vector<Word> words;
  const double N = std::ldexp(1.0, static_cast<int>(len));
  for (std::uint64_t c = 0; c < static_cast<std::uint64_t>(N); ++c)
    if (static_cast<double>(c) / N >= lo && static_cast<double>(c + 1) / N <= hi)
      words.push_back(word_of_code(c, len));
  return words;
}

}  // namespace

TEST_CASE("interval measures and ball clipping") {
  CHECK(interval_measure(kDoubling, 0.2, 0.7) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(interval_measure(kGauss, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(interval_measure(kGauss, 0.25, 0.5) ==
        doctest::Approx(std::log2(1.5 / 1.25)).epsilon(1e-14));
  CHECK_THROWS_AS(interval_measure(kDoubling, 0.5, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(interval_measure(kDoubling, -0.1, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(interval_measure(kGauss, 0.5, 1.2), std::invalid_argument);

  const Interval clipped = ball_interval(0.05, 0.2);
  CHECK(clipped.lo == 0.0);
  CHECK(clipped.hi == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_THROWS_AS(ball_interval(0.5, 0.0), std::invalid_argument);

  IntervalSet s;
  s.parts.push_back(Interval{0.1, 0.2});
  s.parts.push_back(Interval{0.5, 0.8});
  CHECK(set_measure(kDoubling, s) == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(set_contains(s, 0.15));
  CHECK(set_contains(s, 0.5));   // left endpoints belong to the part
  CHECK(!set_contains(s, 0.2));  // right endpoints do not
  CHECK(!set_contains(s, 0.3));
  CHECK(!set_contains(s, 0.9));
}

TEST_CASE("dyadic partition cells") {
  const PartitionResult part = partition_level(kDoubling, 3);
  REQUIRE(part.cells.size() == 8);
  CHECK(part.max_diameter == 0.125);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(part.cells[i].lo == static_cast<double>(i) / 8.0);
    CHECK(part.cells[i].hi == static_cast<double>(i + 1) / 8.0);
  }
  CHECK_THROWS_AS(partition_level(kDoubling, 0), std::invalid_argument);
  CHECK_THROWS_AS(partition_level(kDoubling, 21), std::invalid_argument);
}

TEST_CASE("continued-fraction partition cells") {
  const IntervalMapModel map{MapKind::Gauss, 6};

  SUBCASE("first level lists digit branches plus the overflow wedge") {
    const PartitionResult part = partition_level(map, 1);
    REQUIRE(part.cells.size() == 7);
    CHECK(part.cells[0].lo == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(part.cells[0].hi == doctest::Approx(1.0 / 7.0).epsilon(1e-14));
    CHECK(part.cells[6].lo == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(part.cells[6].hi == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(part.max_diameter == doctest::Approx(0.5).epsilon(1e-14));
    double total = 0.0;
    for (const auto& c : part.cells) total += interval_measure(map, c.lo, c.hi);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("second level covers the interval and stays disjoint") {
    const PartitionResult part = partition_level(map, 2);
    REQUIRE(part.cells.size() == 36 + 1 + 6);
    double total = 0.0;
    for (const auto& c : part.cells) total += interval_measure(map, c.lo, c.hi);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i + 1 < part.cells.size(); ++i)
      CHECK(part.cells[i].hi <= part.cells[i + 1].lo + 1e-12);
  }

  SUBCASE("cell count guard") {
    CHECK_THROWS_AS(partition_level(kGauss, 4), std::invalid_argument);  // 64^4 cells
  }
}

TEST_CASE("dyadic ball approximations") {
  SUBCASE("aligned ball is recovered exactly") {
    const IntervalSet lo = approx_minus(kDoubling, 0.5, 0.25, 2);
    const IntervalSet hi = approx_plus(kDoubling, 0.5, 0.25, 2);
    REQUIRE(lo.parts.size() == 1);
    REQUIRE(hi.parts.size() == 1);
    CHECK(lo.parts[0].lo == 0.25);
    CHECK(lo.parts[0].hi == 0.75);
    CHECK(hi.parts[0].lo == 0.25);
    CHECK(hi.parts[0].hi == 0.75);
    CHECK(set_measure(kDoubling, hi) - set_measure(kDoubling, lo) == 0.0);
  }

  SUBCASE("fine level loses at most one cell per edge") {
    const double x = 1.0 / 3.0, r = 0.1;
    const double delta = std::ldexp(1.0, -10);
    const IntervalSet lo = approx_minus(kDoubling, x, r, 10);
    const IntervalSet hi = approx_plus(kDoubling, x, r, 10);
    const double ball_mass = 2.0 * r;
    CHECK(ball_mass - set_measure(kDoubling, lo) <= 2.0 * delta + 1e-12);
    CHECK(set_measure(kDoubling, hi) - set_measure(kDoubling, lo) <= 4.0 * delta + 1e-12);

    const Interval ball = ball_interval(x, r);
    Rng rng(404);
    for (int i = 0; i < 100; ++i) {
      const double z = rng.next_double();
      if (set_contains(lo, z)) CHECK((z >= ball.lo && z < ball.hi));
      if (z >= ball.lo && z < ball.hi) CHECK(set_contains(hi, z));
    }
  }

  SUBCASE("outer minus inner fits in the boundary ring") {
    const double x = 0.3123, r = 0.07;
    const double delta = std::ldexp(1.0, -8);
    const double gap = set_measure(kDoubling, approx_plus(kDoubling, x, r, 8)) -
                       set_measure(kDoubling, approx_minus(kDoubling, x, r, 8));
    const double ring = interval_measure(kDoubling, x - r - delta, x + r + delta) -
                        interval_measure(kDoubling, x - r + delta, x + r - delta);
    CHECK(gap <= ring + 1e-12);
  }

  SUBCASE("coarse level gives an empty inner union") {
    const IntervalSet lo = approx_minus(kDoubling, 0.3, 0.01, 3);
    const IntervalSet hi = approx_plus(kDoubling, 0.3, 0.01, 3);
    CHECK(lo.parts.empty());
    CHECK(set_measure(kDoubling, lo) == 0.0);
    REQUIRE(hi.parts.size() == 1);
    CHECK(hi.parts[0].lo == 0.25);
    CHECK(hi.parts[0].hi == 0.375);
  }

  SUBCASE("argument guards") {
    CHECK_THROWS_AS(approx_minus(kDoubling, 0.5, 0.1, 0), std::invalid_argument);
    CHECK_THROWS_AS(approx_minus(kDoubling, 0.0, 0.1, 3), std::invalid_argument);
    CHECK_THROWS_AS(approx_plus(kDoubling, 0.5, 0.1, 70), std::invalid_argument);
  }
}

TEST_CASE("continued-fraction ball approximations") {
  const IntervalMapModel map{MapKind::Gauss, 8};

  SUBCASE("sandwich and containment") {
    const double x = 0.3, r = 0.06;
    const std::size_t k = 4;
    const IntervalSet lo = approx_minus(map, x, r, k);
    const IntervalSet hi = approx_plus(map, x, r, k);
    const Interval ball = ball_interval(x, r);
    const double mb = interval_measure(map, ball.lo, ball.hi);
    CHECK(set_measure(map, lo) <= mb + 1e-12);
    CHECK(mb <= set_measure(map, hi) + 1e-12);

    const double delta = partition_level(map, k).max_diameter;
    const double inner = ball.hi - delta > ball.lo + delta
                             ? interval_measure(map, ball.lo + delta, ball.hi - delta)
                             : 0.0;
    const double ring =
        interval_measure(map, std::max(0.0, ball.lo - delta), std::min(1.0, ball.hi + delta)) -
        inner;
    CHECK(set_measure(map, hi) - set_measure(map, lo) <= ring + 1e-12);

    Rng rng(405);
    for (int i = 0; i < 100; ++i) {
      const double z = rng.next_double();
      if (set_contains(lo, z)) CHECK((z >= ball.lo && z < ball.hi));
      if (z >= ball.lo && z < ball.hi) CHECK(set_contains(hi, z));
    }
  }

  SUBCASE("first level around a small ball") {
    // [0.27, 0.33) meets only the digit-3 branch (1/4, 1/3), which is not
    // contained, so the inner union is empty and the outer has one part.
    const IntervalSet lo = approx_minus(map, 0.3, 0.03, 1);
    const IntervalSet hi = approx_plus(map, 0.3, 0.03, 1);
    CHECK(lo.parts.empty());
    REQUIRE(hi.parts.size() == 1);
    CHECK(hi.parts[0].lo == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(hi.parts[0].hi == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  }
}

TEST_CASE("approximation level from the diameter law") {
  ApproxConfig poly;
  poly.law = ApproxConfig::DiameterLaw::Polynomial;
  poly.w = 2.0;
  poly.p = 4.0;
  CHECK(n_of_r(0.01, poly) == 11);  // floor(0.01^{-1/2}) + 1

  ApproxConfig expo;
  expo.law = ApproxConfig::DiameterLaw::Exponential;
  expo.w = 2.0;
  expo.rate = std::log(2.0);
  CHECK(n_of_r(1.0 / 16.0, expo) == 8);  // ceil(2 * ln 16 / ln 2)

  SUBCASE("level never drops as the radius shrinks") {
    const double grid[] = {0.5, 0.3, 0.2, 0.1, 0.05, 0.01, 0.001};
    std::size_t prev_p = 0, prev_e = 0;
    for (const double r : grid) {
      const std::size_t np = n_of_r(r, poly);
      const std::size_t ne = n_of_r(r, expo);
      CHECK(np >= prev_p);
      CHECK(ne >= prev_e);
      prev_p = np;
      prev_e = ne;
    }
  }

  SUBCASE("argument guards") {
    CHECK_THROWS_AS(n_of_r(0.0, poly), std::invalid_argument);
    CHECK_THROWS_AS(n_of_r(1.0, poly), std::invalid_argument);
    ApproxConfig bad = poly;
    bad.w = 1.0;
    CHECK_THROWS_AS(n_of_r(0.1, bad), std::invalid_argument);
    bad = poly;
    bad.p = 0.0;
    CHECK_THROWS_AS(n_of_r(0.1, bad), std::invalid_argument);
    bad = expo;
    bad.rate = 0.0;
    CHECK_THROWS_AS(n_of_r(0.1, bad), std::invalid_argument);
    ApproxConfig steep = poly;
    steep.p = 0.1;
    CHECK_THROWS_AS(n_of_r(1e-3, steep), std::invalid_argument);  // level overflows
  }
}

TEST_CASE("hazard share between two balls") {
  CHECK(rho_balls(kDoubling, 0.3, 0.7, 0.05) == doctest::Approx(0.5).epsilon(1e-15));

  // Lebesgue with radii r and 2r: the hazard ball carries two thirds.
  const double two_thirds = rho_balls(kDoubling, BallSpec{0.25, 0.05}, BallSpec{0.7, 0.1});
  CHECK(two_thirds == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  const double mu_u = std::log2(1.25 / 1.15);
  const double mu_v = std::log2(1.85 / 1.75);
  CHECK(rho_balls(kGauss, 0.2, 0.8, 0.05) ==
        doctest::Approx(mu_v / (mu_u + mu_v)).epsilon(1e-12));

  SUBCASE("swapping the roles flips the share") {
    CHECK(rho_balls(kDoubling, 0.2, 0.6, 0.07) + rho_balls(kDoubling, 0.6, 0.2, 0.07) ==
          doctest::Approx(1.0).epsilon(1e-15));
    CHECK(rho_balls(kGauss, 0.15, 0.55, 0.04) + rho_balls(kGauss, 0.55, 0.15, 0.04) ==
          doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("argument guards") {
    CHECK_THROWS_AS(rho_balls(kDoubling, 0.4, 0.45, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(rho_balls(kDoubling, 0.02, 0.7, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(rho_balls(kDoubling, 0.3, 0.97, 0.05), std::invalid_argument);
  }
}

TEST_CASE("ball visit counts follow the geometric law") {
  const double r = std::ldexp(1.0, -8);
  const SimulateResult sim = sigma_balls(kDoubling, 0.3123, 0.7321, r, 100000, 6400, 11, 4);
  CHECK(sim.samples == 100000);
  CHECK(sim.censored == 0);
  CHECK(!sim.flagged);
  double total = sim.empirical.tail;
  for (const double p : sim.empirical.probs) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  const TvInterval tv = tv_distance(sim.empirical, geo_pmf(0.5, 4000));
  CHECK(tv.upper <= 0.05);
}

TEST_CASE("dyadic ball equals its cylinder union path by path") {
  // [0.1875, 0.4375) and [0.625, 0.875) are unions of length-4 dyadic cells,
  // so the windowed orbit scan and the symbolic scan must agree sample by
  // sample at equal seeds, whatever the thread counts.
  const double x = 0.3125, y = 0.75, r = 0.125;
  const SimulateResult from_balls = sigma_balls(kDoubling, x, y, r, 20000, 2000, 33, 1);

  Eigen::VectorXd half(2);
  half << 0.5, 0.5;
  const ProcessModel bits = IIDModel(half);
  const CylinderUnion U(dyadic_words(x - r, x + r, 4), 2);
  const CylinderUnion V(dyadic_words(y - r, y + r, 4), 2);
  REQUIRE(U.words().size() == 4);
  REQUIRE(V.words().size() == 4);
  const SimulateResult symbolic =
      simulate_sigma(bits, U, V, 20000, 2000, 33, TauConvention::FromZero, 4);

  CHECK(from_balls.censored == symbolic.censored);
  CHECK(from_balls.samples == symbolic.samples);
  REQUIRE(from_balls.empirical.probs.size() == symbolic.empirical.probs.size());
  for (std::size_t k = 0; k < symbolic.empirical.probs.size(); ++k)
    CHECK(from_balls.empirical.probs[k] == symbolic.empirical.probs[k]);
}

TEST_CASE("smaller targets sharpen the geometric fit") {
  double prev = 1.0;
  double first = 0.0, last = 0.0;
  for (const int j : {4, 6, 8}) {
    const double r = std::ldexp(1.0, -j);
    const SimulateResult sim =
        sigma_balls(kDoubling, 0.3123, 0.7321, r, 30000, default_horizon(2.0 * r), 21, 4);
    const TvInterval tv = tv_distance(sim.empirical, geo_pmf(0.5, 4000));
    CHECK(tv.upper <= prev + 0.01);
    prev = tv.upper;
    if (j == 4) first = tv.upper;
    last = tv.upper;
  }
  CHECK(last < first);
}

TEST_CASE("gauss ball visit counts") {
  const double rho = rho_balls(kGauss, 0.3, 0.7, 0.03);
  const SimulateResult sim = sigma_balls(kGauss, 0.3, 0.7, 0.03, 30000, 5000, 7, 4);
  CHECK(sim.censored == 0);
  CHECK(!sim.flagged);
  const TvInterval tv = tv_distance(sim.empirical, geo_pmf(rho, 4000));
  CHECK(tv.upper <= 0.05);
}

TEST_CASE("short horizons censor and flag") {
  const double r = std::ldexp(1.0, -8);
  const SimulateResult sim = sigma_balls(kDoubling, 0.3123, 0.7321, r, 2000, 0, 5, 2);
  CHECK(sim.flagged);
  CHECK(sim.censored >= 1900);
  CHECK(sim.censored < sim.samples);
  // A path kept at horizon zero saw the hazard immediately, so its count is 0.
  REQUIRE(sim.empirical.probs.size() == 1);
  CHECK(sim.empirical.probs[0] == 1.0);

  CHECK_THROWS_AS(sigma_balls(kDoubling, 0.4, 0.45, 0.05, 100, 100, 1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(sigma_balls(kDoubling, 0.02, 0.7, 0.05, 100, 100, 1, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(sigma_balls(kDoubling, 0.3, 0.7, 0.05, 0, 100, 1, 1),
                  std::invalid_argument);
}

TEST_CASE("first return times scale with the radius") {
  std::vector<double> radii;
  for (int j = 4; j <= 14; ++j) radii.push_back(std::ldexp(1.0, -j));

  SUBCASE("doubling self returns") {
    const RecurrenceReport rep =
        recurrence_rate_estimate(kDoubling, 0.6180339887498949, std::nullopt, radii, 10000000, 6);
    CHECK(rep.truncated == 0);
    REQUIRE(rep.radii.size() == radii.size());
    CHECK(std::abs(rep.slope - 1.0) <= 0.15);
    CHECK(rep.min_suffix_slope <= rep.slope);
    for (std::size_t j = 1; j < rep.taus.size(); ++j) CHECK(rep.taus[j] >= rep.taus[j - 1]);

    const RecurrenceReport again =
        recurrence_rate_estimate(kDoubling, 0.6180339887498949, std::nullopt, radii, 10000000, 6);
    CHECK(again.taus == rep.taus);
  }

  SUBCASE("gauss self returns") {
    std::vector<double> rg(radii.begin(), radii.begin() + 9);  // down to 2^-12
    const RecurrenceReport rep =
        recurrence_rate_estimate(kGauss, 0.2716531, std::nullopt, rg, 10000000, 1);
    CHECK(rep.truncated == 0);
    CHECK(std::abs(rep.slope - 1.0) <= 0.2);
    CHECK(rep.min_suffix_slope >= 0.7);
    // The orbit is determined by the start alone; the seed only backs up
    // measure-zero degeneracies, so every seed sees the same return times.
    const RecurrenceReport other =
        recurrence_rate_estimate(kGauss, 0.2716531, std::nullopt, rg, 10000000, 9);
    CHECK(other.taus == rep.taus);
  }

  SUBCASE("hitting a remote ball scales the same way") {
    const RecurrenceReport rep =
        recurrence_rate_estimate(kDoubling, 0.3, 0.7, radii, 10000000, 7);
    CHECK(std::abs(rep.slope - 1.0) <= 0.4);
    for (std::size_t j = 1; j < rep.taus.size(); ++j) CHECK(rep.taus[j] >= rep.taus[j - 1]);
  }

  SUBCASE("short horizons truncate the schedule tail") {
    std::vector<double> rs;
    for (int j = 2; j <= 14; ++j) rs.push_back(std::ldexp(1.0, -j));
    const RecurrenceReport rep =
        recurrence_rate_estimate(kDoubling, 0.6180339887498949, std::nullopt, rs, 200, 1);
    CHECK(rep.truncated > 0);
    CHECK(rep.radii.size() + rep.truncated == rs.size());
    CHECK(rep.radii.size() == rep.taus.size());
    for (const std::uint64_t t : rep.taus) CHECK(t <= 200);
  }

  SUBCASE("argument guards") {
    CHECK_THROWS_AS(recurrence_rate_estimate(kDoubling, 0.5, std::nullopt, {}, 100, 1),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        recurrence_rate_estimate(kDoubling, 0.5, std::nullopt, {0.1, 0.1}, 100, 1),
        std::invalid_argument);
    CHECK_THROWS_AS(
        recurrence_rate_estimate(kDoubling, 0.0, std::nullopt, {0.1, 0.05}, 100, 1),
        std::invalid_argument);
    CHECK_THROWS_AS(
        recurrence_rate_estimate(kDoubling, 0.5, 0.01, {0.25, 0.1}, 100, 1),
        std::invalid_argument);
    CHECK_THROWS_AS(recurrence_rate_estimate(kDoubling, 0.6180339887498949, std::nullopt,
                                             {0.0625, 0.03125}, 1, 1),
                    std::runtime_error);
  }
}
