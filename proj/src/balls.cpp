#include "hazret/balls.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

#include "hazret/measures.hpp"
#include "hazret/rng.hpp"

namespace hazret {

namespace {

constexpr double kMaxCells = 2e6;

void check_interval(double lo, double hi) {
  if (!(lo >= 0.0) || !(hi <= 1.0) || !(lo <= hi))
    throw std::invalid_argument("interval_measure: need 0 <= lo <= hi <= 1");
}

void check_interior(const BallSpec& ball, const char* where) {
  if (!(ball.x > 0.0 && ball.x < 1.0) || !(ball.r > 0.0) ||
      !(ball.r < std::min(ball.x, 1.0 - ball.x)))
    throw std::invalid_argument(std::string(where) + ": ball is not interior to (0,1)");
}

void check_disjoint(const BallSpec& a, const BallSpec& b, const char* where) {
  if (std::abs(a.x - b.x) < a.r + b.r)
    throw std::invalid_argument(std::string(where) + ": balls overlap");
}

}  // namespace

double interval_measure(const IntervalMapModel& map, double lo, double hi) {
  check_interval(lo, hi);
  if (map.kind == MapKind::Doubling) return hi - lo;
  return gauss_interval_measure(lo, hi);
}

double set_measure(const IntervalMapModel& map, const IntervalSet& s) {
  double total = 0.0;
  for (const auto& part : s.parts) total += interval_measure(map, part.lo, part.hi);
  return total;
}

bool set_contains(const IntervalSet& s, double z) {
  for (const auto& part : s.parts) {
    if (z < part.lo) return false;
    if (z < part.hi) return true;
  }
  return false;
}

Interval ball_interval(double x, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("ball_interval: radius must be positive");
  return Interval{std::max(0.0, x - r), std::min(1.0, x + r)};
}

PartitionResult partition_level(const IntervalMapModel& map, std::size_t n) {
  if (n == 0) throw std::invalid_argument("partition_level: level must be positive");
  PartitionResult out;
  if (map.kind == MapKind::Doubling) {
    if (n > 63 || std::ldexp(1.0, static_cast<int>(n)) > kMaxCells)
      throw std::invalid_argument("partition_level: cell count exceeds 2e6");
    const std::uint64_t N = std::uint64_t{1} << n;
    out.cells.reserve(N);
    const double w = std::ldexp(1.0, -static_cast<int>(n));
    for (std::uint64_t i = 0; i < N; ++i)
      out.cells.push_back(Interval{static_cast<double>(i) * w, static_cast<double>(i + 1) * w});
    out.max_diameter = w;
    return out;
  }
  const std::uint32_t cap = map.digit_cap;
  if (std::pow(static_cast<double>(cap), static_cast<double>(n)) > kMaxCells)
    throw std::invalid_argument("partition_level: cell count exceeds 2e6");
  // Depth-first over digit words; a prefix ending in the overflow class stays
  // one cell, so the collection is a genuine partition of (0,1).
  Word w;
  std::function<void(std::size_t)> rec = [&](std::size_t depth) {
    {
      w.push_back(cap);
      const GaussInterval ovf = gauss_word_interval(cap, w);
      out.cells.push_back(Interval{ovf.lo, ovf.hi});
      out.max_diameter = std::max(out.max_diameter, ovf.width);
      w.pop_back();
    }
    for (Symbol s = 0; s < cap; ++s) {
      w.push_back(s);
      if (depth + 1 == n) {
        const GaussInterval cell = gauss_word_interval(cap, w);
        out.cells.push_back(Interval{cell.lo, cell.hi});
        out.max_diameter = std::max(out.max_diameter, cell.width);
      } else {
        rec(depth + 1);
      }
      w.pop_back();
    }
  };
  rec(0);
  std::sort(out.cells.begin(), out.cells.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  return out;
}

namespace {

// Both cylinder approximations of one ball in a single sweep. A cell fully
// inside the ball is emitted whole rather than refined to level k; the union
// of its level-k descendants is the same point set.
struct ApproxPair {
  IntervalSet minus;
  IntervalSet plus;
};

ApproxPair approx_pair(const IntervalMapModel& map, double x, double r, std::size_t k) {
  if (k == 0) throw std::invalid_argument("ball approximation: level must be positive");
  if (!(x > 0.0 && x < 1.0) || !(r > 0.0))
    throw std::invalid_argument("ball approximation: need x in (0,1) and r > 0");
  const Interval ball = ball_interval(x, r);
  const double a = ball.lo, b = ball.hi;
  ApproxPair out;
  if (map.kind == MapKind::Doubling) {
    if (k > 63 || std::ldexp(1.0, static_cast<int>(k)) > kMaxCells)
      throw std::invalid_argument("ball approximation: cell count exceeds 2e6");
    const double N = std::ldexp(1.0, static_cast<int>(k));
    const double eps = 1e-9;  // index-boundary slack, far below one cell
    const double lo_in = std::max(0.0, std::ceil(a * N - eps));
    const double hi_in = std::min(N, std::floor(b * N + eps));
    if (hi_in > lo_in)
      out.minus.parts.push_back(Interval{lo_in / N, hi_in / N});
    const double lo_touch = std::max(0.0, std::floor(a * N + eps));
    const double hi_touch = std::min(N, std::ceil(b * N - eps));
    if (hi_touch > lo_touch)
      out.plus.parts.push_back(Interval{lo_touch / N, hi_touch / N});
    return out;
  }
  const std::uint32_t cap = map.digit_cap;
  std::size_t emitted = 0;
  Word w;
  std::function<void(const GaussInterval&)> rec = [&](const GaussInterval& cell) {
    if (cell.hi <= a || cell.lo >= b) return;  // misses [a, b)
    const bool contained = cell.lo >= a && cell.hi <= b;
    const bool atom = w.size() == k || (!w.empty() && w.back() == cap);
    if (contained || atom) {
      if (++emitted > static_cast<std::size_t>(kMaxCells))
        throw std::runtime_error("ball approximation: cell count exceeds 2e6");
      out.plus.parts.push_back(Interval{cell.lo, cell.hi});
      if (contained) out.minus.parts.push_back(Interval{cell.lo, cell.hi});
      return;
    }
    for (Symbol s = 0; s <= cap; ++s) {
      w.push_back(s);
      rec(gauss_word_interval(cap, w));
      w.pop_back();
    }
  };
  rec(GaussInterval{0.0, 1.0, 1.0});
  const auto by_lo = [](const Interval& p, const Interval& q) { return p.lo < q.lo; };
  std::sort(out.minus.parts.begin(), out.minus.parts.end(), by_lo);
  std::sort(out.plus.parts.begin(), out.plus.parts.end(), by_lo);
  return out;
}

}  // namespace

IntervalSet approx_minus(const IntervalMapModel& map, double x, double r, std::size_t k) {
  return approx_pair(map, x, r, k).minus;
}

IntervalSet approx_plus(const IntervalMapModel& map, double x, double r, std::size_t k) {
  return approx_pair(map, x, r, k).plus;
}

std::size_t n_of_r(double r, const ApproxConfig& cfg) {
  if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("n_of_r: radius outside (0,1)");
  if (!(cfg.w > 1.0)) throw std::invalid_argument("n_of_r: oversampling exponent must exceed 1");
  double n;
  if (cfg.law == ApproxConfig::DiameterLaw::Polynomial) {
    if (!(cfg.p > 0.0)) throw std::invalid_argument("n_of_r: decay exponent must be positive");
    const double v = std::pow(r, -cfg.w / cfg.p);
    n = std::floor(v * (1.0 + 1e-12)) + 1.0;  // slack keeps exact powers on the integer
  } else {
    if (!(cfg.rate > 0.0)) throw std::invalid_argument("n_of_r: decay rate must be positive");
    const double v = cfg.w * std::log(1.0 / r) / cfg.rate;
    n = std::max(1.0, std::ceil(v * (1.0 - 1e-12)));
  }
  if (!(n < 9e15)) throw std::invalid_argument("n_of_r: level overflows");
  return static_cast<std::size_t>(n);
}

double rho_balls(const IntervalMapModel& map, const BallSpec& target, const BallSpec& hazard) {
  check_interior(target, "rho_balls");
  check_interior(hazard, "rho_balls");
  check_disjoint(target, hazard, "rho_balls");
  const Interval bu = ball_interval(target.x, target.r);
  const Interval bv = ball_interval(hazard.x, hazard.r);
  const double mu = interval_measure(map, bu.lo, bu.hi);
  const double mv = interval_measure(map, bv.lo, bv.hi);
  return mv / (mu + mv);
}

double rho_balls(const IntervalMapModel& map, double x, double y, double r) {
  return rho_balls(map, BallSpec{x, r}, BallSpec{y, r});
}

namespace {

// Half-open ball as a 64-bit window range: the leading 64 bits W of a point
// decide membership except on the two boundary windows of width 2^-64,
// which is negligible against any sampling noise here.
struct RasterBall {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  bool to_one = false;  // right edge clipped at 1, no upper comparison

  bool contains(std::uint64_t w) const { return w >= lo && (to_one || w < hi); }
};

RasterBall rasterize(const Interval& ball) {
  constexpr long double scale = 18446744073709551616.0L;  // 2^64
  RasterBall rb;
  rb.lo = ball.lo <= 0.0 ? 0
                         : static_cast<std::uint64_t>(
                               std::ceil(static_cast<long double>(ball.lo) * scale));
  rb.to_one = ball.hi >= 1.0;
  if (!rb.to_one)
    rb.hi = static_cast<std::uint64_t>(std::ceil(static_cast<long double>(ball.hi) * scale));
  return rb;
}

struct BallOutcome {
  std::uint64_t sigma = 0;
  bool censored = false;
};

// Doubling path: windows are checked in start order, hazard first, so a
// shared window counts as the hazard hit exactly as in the symbolic scan.
BallOutcome run_doubling_path(SymbolStream& bits, const RasterBall& U, const RasterBall& V,
                              std::size_t horizon) {
  std::uint64_t W = 0;
  std::uint64_t sigma = 0;
  for (std::size_t t = 0;; ++t) {
    W = (W << 1) | bits.next();
    if (t + 1 < 64) continue;
    const std::size_t k = t + 1 - 64;
    if (k > horizon) return {0, true};
    if (V.contains(W)) return {sigma, false};
    if (U.contains(W)) ++sigma;
  }
}

double gauss_step(double x, Rng& rng) {
  while (!(x > 1e-300)) x = rng.next_double();  // measure-zero corner, restart the point
  x = 1.0 / x;
  return x - std::floor(x);
}

BallOutcome run_gauss_path(Rng& rng, const Interval& U, const Interval& V,
                           std::size_t horizon) {
  double x = std::exp2(rng.next_double()) - 1.0;  // stationary start
  std::uint64_t sigma = 0;
  for (std::size_t k = 0;; ++k) {
    if (k > horizon) return {0, true};
    if (x >= V.lo && x < V.hi) return {sigma, false};
    if (x >= U.lo && x < U.hi) ++sigma;
    x = gauss_step(x, rng);
  }
}

struct BallTally {
  std::vector<std::uint64_t> hist;
  std::uint64_t censored = 0;

  void record(const BallOutcome& o) {
    if (o.censored) {
      ++censored;
      return;
    }
    if (o.sigma >= hist.size()) hist.resize(o.sigma + 1, 0);
    ++hist[o.sigma];
  }
};

}  // namespace

SimulateResult sigma_balls(const IntervalMapModel& map, double x, double y, double r,
                           std::size_t n_samples, std::size_t horizon, std::uint64_t seed,
                           unsigned threads) {
  const BallSpec target{x, r}, hazard{y, r};
  check_interior(target, "sigma_balls");
  check_interior(hazard, "sigma_balls");
  check_disjoint(target, hazard, "sigma_balls");
  if (n_samples == 0) throw std::invalid_argument("sigma_balls: need at least one path");
  if (threads == 0) threads = 1;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_samples));

  const Interval bu = ball_interval(x, r);
  const Interval bv = ball_interval(y, r);
  const RasterBall ru = rasterize(bu);
  const RasterBall rv = rasterize(bv);

  std::vector<BallTally> tallies(threads);
  const auto worker = [&](unsigned c) {
    BallTally& tally = tallies[c];
    if (map.kind == MapKind::Doubling) {
      Eigen::VectorXd half(2);
      half << 0.5, 0.5;
      const ProcessModel bits_model = IIDModel(half);
      SymbolStream bits(bits_model, 0);
      for (std::size_t i = c; i < n_samples; i += threads) {
        bits.reseed(derive_seed(seed, i));
        tally.record(run_doubling_path(bits, ru, rv, horizon));
      }
    } else {
      for (std::size_t i = c; i < n_samples; i += threads) {
        Rng rng(derive_seed(seed, i));
        tally.record(run_gauss_path(rng, bu, bv, horizon));
      }
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned c = 0; c < threads; ++c) pool.emplace_back(worker, c);
    for (auto& th : pool) th.join();
  }

  std::vector<std::uint64_t> hist;
  std::uint64_t censored = 0;
  for (const auto& t : tallies) {
    if (t.hist.size() > hist.size()) hist.resize(t.hist.size(), 0);
    for (std::size_t k = 0; k < t.hist.size(); ++k) hist[k] += t.hist[k];
    censored += t.censored;
  }

  SimulateResult out;
  out.samples = n_samples;
  out.censored = censored;
  out.flagged = censored * 10 > n_samples;
  const std::uint64_t kept = n_samples - censored;
  if (kept > 0) {
    out.empirical.probs.resize(hist.size());
    for (std::size_t k = 0; k < hist.size(); ++k)
      out.empirical.probs[k] = static_cast<double>(hist[k]) / static_cast<double>(kept);
  }
  return out;
}

namespace {

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys, std::size_t s) {
  const std::size_t n = xs.size() - s;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = s; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = s; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  if (!(den > 0.0)) throw std::runtime_error("recurrence: degenerate radius schedule");
  return num / den;
}

}  // namespace

RecurrenceReport recurrence_rate_estimate(const IntervalMapModel& map, double start,
                                          std::optional<double> center,
                                          const std::vector<double>& r_schedule,
                                          std::size_t horizon, std::uint64_t seed) {
  if (r_schedule.empty()) throw std::invalid_argument("recurrence: empty radius schedule");
  for (std::size_t j = 0; j < r_schedule.size(); ++j) {
    if (!(r_schedule[j] > 0.0))
      throw std::invalid_argument("recurrence: radii must be positive");
    if (j > 0 && !(r_schedule[j] < r_schedule[j - 1]))
      throw std::invalid_argument("recurrence: radii must be strictly decreasing");
  }
  if (!(start > 0.0 && start < 1.0))
    throw std::invalid_argument("recurrence: start outside (0,1)");
  const double c = center.value_or(start);
  check_interior(BallSpec{c, r_schedule.front()}, "recurrence");

  const std::size_t J = r_schedule.size();
  std::vector<std::uint64_t> taus(J, 0);
  std::size_t idx = 0;

  if (map.kind == MapKind::Doubling) {
    std::vector<RasterBall> balls;
    balls.reserve(J);
    for (const double r : r_schedule) balls.push_back(rasterize(ball_interval(c, r)));
    // Orbit bits: the start's dyadic expansion, then seeded bits. The double
    // names an interval of width 2^-53; the tail picks a representative.
    Rng rng(seed);
    double xe = start;
    const auto next_bit = [&]() -> std::uint64_t {
      if (xe > 0.0) {
        xe *= 2.0;
        if (xe >= 1.0) {
          xe -= 1.0;
          return 1;
        }
        return 0;
      }
      return rng.next_u64() >> 63;
    };
    std::uint64_t W = 0;
    for (std::size_t t = 0; idx < J; ++t) {
      W = (W << 1) | next_bit();
      if (t + 1 < 64) continue;
      const std::size_t k = t + 1 - 64;
      if (k == 0) continue;  // returns are counted from time 1
      if (k > horizon) break;
      while (idx < J && balls[idx].contains(W)) {
        taus[idx] = k;
        ++idx;
      }
    }
  } else {
    Rng rng(seed);
    double x = start;
    for (std::size_t k = 1; idx < J && k <= horizon; ++k) {
      x = gauss_step(x, rng);
      while (idx < J && x >= c - r_schedule[idx] && x < c + r_schedule[idx]) {
        taus[idx] = k;
        ++idx;
      }
    }
  }

  RecurrenceReport out;
  out.truncated = J - idx;
  if (idx < 2) throw std::runtime_error("recurrence: fewer than two radii reached in time");
  out.radii.assign(r_schedule.begin(), r_schedule.begin() + static_cast<std::ptrdiff_t>(idx));
  out.taus.assign(taus.begin(), taus.begin() + static_cast<std::ptrdiff_t>(idx));

  std::vector<double> xs(idx), ys(idx);
  for (std::size_t j = 0; j < idx; ++j) {
    xs[j] = -std::log(out.radii[j]);
    ys[j] = std::log(static_cast<double>(out.taus[j]));
  }
  out.slope = fit_slope(xs, ys, 0);
  out.min_suffix_slope = out.slope;
  for (std::size_t s = 1; s + 2 <= idx; ++s)
    out.min_suffix_slope = std::min(out.min_suffix_slope, fit_slope(xs, ys, s));
  return out;
}

}  // namespace hazret
