#include "hazret/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "hazret/rng.hpp"

namespace hazret {

std::size_t default_horizon(double pV) {
  if (!(pV > 0.0 && pV <= 1.0)) throw std::invalid_argument("default_horizon: pV outside (0,1]");
  return static_cast<std::size_t>(std::ceil(50.0 / pV));
}

namespace {

std::uint64_t upow(std::uint64_t base, std::size_t e) {
  std::uint64_t v = 1;
  for (std::size_t i = 0; i < e; ++i) v *= base;
  return v;
}

struct PathOutcome {
  std::uint64_t sigma = 0;
  bool censored = false;
};

// One path, scanning window start indices in order with rolling codes and
// stopping at the hazard hit. Start k is a hazard hit when the m-window at k
// matches V (k >= first_v); the count is the number of U-matches at starts
// strictly before the hit. Matches tau_and_sigma on the same symbol stream.
class RollingScanner {
 public:
  RollingScanner(const CylinderUnion& U, const CylinderUnion& V, std::size_t horizon,
                 TauConvention convention)
      : U_(U), V_(V), horizon_(horizon),
        n_(U.word_length()), m_(V.word_length()),
        alpha_(U.alphabet_size()),
        pow_u_(upow(alpha_, n_)), pow_v_(upow(alpha_, m_)),
        first_v_(convention == TauConvention::FromOne ? 1 : 0) {}

  PathOutcome run(SymbolStream& stream) {
    std::uint64_t cu = 0, cv = 0;
    std::uint64_t committed = 0;
    pending_.clear();
    std::size_t head = 0;
    for (std::size_t t = 0;; ++t) {
      const Symbol x = stream.next();
      cu = (cu * alpha_ + x) % pow_u_;
      cv = (cv * alpha_ + x) % pow_v_;
      if (t + 1 >= m_) {
        const std::size_t kv = t + 1 - m_;
        if (kv > horizon_) return {0, true};
        if (kv >= first_v_ && V_.contains_code(cv)) {
          std::uint64_t sigma = committed;
          for (std::size_t i = head; i < pending_.size(); ++i)
            if (pending_[i] < kv) ++sigma;
          return {drain(stream, cu, kv, sigma, t), false};
        }
        while (head < pending_.size() && pending_[head] <= kv) {
          ++committed;
          ++head;
        }
      }
      if (t + 1 >= n_ && U_.contains_code(cu)) {
        if (n_ >= m_) ++committed;  // hazard frontier already cleared this start
        else pending_.push_back(t + 1 - n_);
      }
    }
  }

 private:
  // Return windows starting before tau that have not finished streaming yet
  // (possible only when the return word is the longer one).
  std::uint64_t drain(SymbolStream& stream, std::uint64_t cu, std::size_t tau,
                      std::uint64_t sigma, std::size_t t_hit) {
    for (std::size_t t = t_hit; t + 1 < tau + n_; ++t) {
      if (t > t_hit) cu = (cu * alpha_ + stream.next()) % pow_u_;
      if (t + 1 >= n_ && t + 1 - n_ < tau && U_.contains_code(cu)) ++sigma;
    }
    return sigma;
  }

  const CylinderUnion& U_;
  const CylinderUnion& V_;
  const std::size_t horizon_, n_, m_;
  const std::uint64_t alpha_, pow_u_, pow_v_;
  const std::size_t first_v_;
  std::vector<std::size_t> pending_;
};

struct WorkerTally {
  std::vector<std::uint64_t> hist;
  std::uint64_t censored = 0;

  void record(const PathOutcome& o) {
    if (o.censored) {
      ++censored;
      return;
    }
    if (o.sigma >= hist.size()) hist.resize(o.sigma + 1, 0);
    ++hist[o.sigma];
  }
};

}  // namespace

SimulateResult simulate_sigma(const ProcessModel& model, const CylinderUnion& U,
                              const CylinderUnion& V, std::size_t n_samples,
                              std::size_t horizon, std::uint64_t seed,
                              TauConvention convention, unsigned threads) {
  if (U.alphabet_size() != V.alphabet_size())
    throw std::invalid_argument("simulate_sigma: alphabet mismatch");
  if (U.alphabet_size() != alphabet_size(model))
    throw std::invalid_argument("simulate_sigma: set alphabet does not match the model");
  if (n_samples == 0) throw std::invalid_argument("simulate_sigma: need at least one path");
  if (threads == 0) threads = 1;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_samples));

  const bool rolling = U.encodable() && V.encodable();
  const std::size_t L = std::max(U.word_length(), V.word_length());

  std::vector<WorkerTally> tallies(threads);
  const auto worker = [&](unsigned c) {
    SymbolStream stream(model, 0);
    RollingScanner scanner(U, V, horizon, convention);
    std::vector<Symbol> orbit;
    WorkerTally& tally = tallies[c];
    for (std::size_t i = c; i < n_samples; i += threads) {
      stream.reseed(derive_seed(seed, i));
      if (rolling) {
        tally.record(scanner.run(stream));
      } else {
        orbit.resize(horizon + L);
        for (auto& s : orbit) s = stream.next();
        const HitStats hs = tau_and_sigma(orbit, U, V, convention, horizon);
        tally.record(PathOutcome{hs.sigma, hs.censored});
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

bool usable_word(const ProcessModel& model, const Word& w) {
  if (const auto* g = std::get_if<GaussDigitModel>(&model)) {
    for (Symbol s : w)
      if (s >= g->digit_cap) return false;  // overflow symbol is not a cylinder
    return true;
  }
  return cylinder_measure(model, w) > 0.0;
}

bool prefix_overlap(const Word& a, const Word& b) {
  const std::size_t t = std::min(a.size(), b.size());
  return std::equal(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(t), b.begin());
}

Word draw_word(const ProcessModel& model, std::size_t len, std::uint64_t seed) {
  SymbolStream stream(model, seed);
  Word w(len);
  for (auto& s : w) s = stream.next();
  return w;
}

}  // namespace

TrendPoint cylinder_trend_point(const ProcessModel& model, const Word& u_word,
                                const Word& v_word, std::size_t n_samples,
                                std::uint64_t seed, unsigned threads) {
  if (u_word.empty() || v_word.empty())
    throw std::invalid_argument("cylinder trend: empty word");
  if (prefix_overlap(u_word, v_word))
    throw std::invalid_argument("cylinder trend: one word is a prefix of the other");
  if (!usable_word(model, u_word) || !usable_word(model, v_word))
    throw std::invalid_argument("cylinder trend: word cylinder has measure zero");

  TrendPoint pt;
  pt.n = u_word.size();
  pt.m = v_word.size();
  pt.u_word = u_word;
  pt.v_word = v_word;
  pt.pU = cylinder_measure(model, u_word);
  pt.pV = cylinder_measure(model, v_word);
  pt.rho = pt.pV / (pt.pU + pt.pV);

  const std::uint32_t alpha = alphabet_size(model);
  const CylinderUnion U({u_word}, alpha);
  const CylinderUnion V({v_word}, alpha);
  const auto sim = simulate_sigma(model, U, V, n_samples, default_horizon(pt.pV), seed,
                                  TauConvention::FromZero, threads);
  pt.censored = sim.censored;
  pt.samples = sim.samples;
  pt.flagged = sim.flagged;
  if (sim.censored == sim.samples) {
    pt.tv = TvInterval{0.0, 1.0};  // nothing observed, vacuous enclosure
    pt.flagged = true;
    return pt;
  }
  const std::size_t Kobs = sim.empirical.probs.empty() ? 0 : sim.empirical.probs.size() - 1;
  const auto Kgeo = static_cast<std::size_t>(std::ceil(50.0 / pt.rho));
  pt.tv = tv_distance(sim.empirical, geo_pmf(pt.rho, std::max(Kobs, Kgeo)));
  return pt;
}

std::vector<TrendPoint> cylinder_trend_experiment(
    const ProcessModel& model, const std::vector<std::size_t>& n_schedule,
    HazardLengthRule rule, std::size_t n_samples, std::uint64_t seed, unsigned threads) {
  if (n_schedule.empty()) throw std::invalid_argument("cylinder trend: empty schedule");
  std::vector<TrendPoint> out;
  out.reserve(n_schedule.size());
  for (const std::size_t n : n_schedule) {
    if (n == 0) throw std::invalid_argument("cylinder trend: zero word length");
    std::size_t resamples = 0;
    bool done = false;
    for (std::size_t attempt = 0; attempt < 1000 && !done; ++attempt) {
      const std::uint64_t base = (static_cast<std::uint64_t>(n) << 32) |
                                 (static_cast<std::uint64_t>(attempt) << 2);
      const Word xi = draw_word(model, n, derive_seed(seed, base | 0));
      if (!usable_word(model, xi)) {
        ++resamples;
        continue;
      }
      Word eta;
      if (rule == HazardLengthRule::MatchLength) {
        eta = draw_word(model, n, derive_seed(seed, base | 1));
        if (!usable_word(model, eta)) {
          ++resamples;
          continue;
        }
      } else {
        // Grow the hazard word until its measure best matches the return's.
        const Word stretch = draw_word(model, n + 64, derive_seed(seed, base | 1));
        const double target = std::log(cylinder_measure(model, xi));
        double best_gap = 0.0;
        std::size_t best_m = 0;
        for (std::size_t m = 1; m <= stretch.size(); ++m) {
          const Word prefix(stretch.begin(), stretch.begin() + static_cast<std::ptrdiff_t>(m));
          if (!usable_word(model, prefix)) break;
          const double gap = std::abs(std::log(cylinder_measure(model, prefix)) - target);
          if (best_m == 0 || gap < best_gap) {
            best_gap = gap;
            best_m = m;
          }
        }
        if (best_m == 0) {
          ++resamples;
          continue;
        }
        eta.assign(stretch.begin(), stretch.begin() + static_cast<std::ptrdiff_t>(best_m));
      }
      if (prefix_overlap(xi, eta)) {
        ++resamples;
        continue;
      }
      TrendPoint pt = cylinder_trend_point(model, xi, eta, n_samples,
                                           derive_seed(seed, base | 2), threads);
      pt.resamples = resamples;
      out.push_back(std::move(pt));
      done = true;
    }
    if (!done) throw std::runtime_error("cylinder trend: resampling budget exhausted");
  }
  return out;
}

}  // namespace hazret
