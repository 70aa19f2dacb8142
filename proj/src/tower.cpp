#include "hazret/tower.hpp"

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>

namespace hazret {

namespace {

constexpr std::uint64_t kMaxCells = 2000000;
constexpr std::uint32_t kMaxRoof = 1000000;

std::uint64_t ipow(std::uint64_t base, std::size_t exp) {
  std::uint64_t r = 1;
  while (exp--) r *= base;
  return r;
}

void check_lift(const TowerModel& tower, const CylinderUnion& base_set,
                std::uint32_t level, const std::string& who) {
  if (base_set.alphabet_size() != tower.alphabet())
    throw std::invalid_argument(who + ": set alphabet does not match the base process");
  const std::size_t s = tower.prefix_len();
  const std::size_t n = base_set.word_length();
  const std::uint64_t a = tower.alphabet();
  for (const Word& w : base_set.words()) {
    if (n >= s) {
      std::uint64_t code = 0;
      for (std::size_t i = 0; i < s; ++i) code = code * a + w[i];
      if (level >= tower.roof_at(code))
        throw std::invalid_argument(who + ": level reaches the roof over a covered cell");
    } else {
      // short word: every roof cell under this cylinder must clear the level
      std::uint64_t lo = 0;
      for (std::size_t i = 0; i < n; ++i) lo = lo * a + w[i];
      const std::uint64_t span = ipow(a, s - n);
      lo *= span;
      for (std::uint64_t c = lo; c < lo + span; ++c)
        if (level >= tower.roof_at(c))
          throw std::invalid_argument(who + ": level reaches the roof over a covered cell");
    }
  }
}

void check_disjoint_projections(const CylinderUnion& U, const CylinderUnion& V,
                                const std::string& who) {
  const std::size_t c = std::min(U.word_length(), V.word_length());
  for (const Word& u : U.words())
    for (const Word& v : V.words())
      if (std::equal(u.begin(), u.begin() + c, v.begin()))
        throw std::invalid_argument(who + ": target and hazard base projections overlap");
}

struct PathCounts {
  std::uint64_t tower_sigma = 0;
  std::uint64_t base_sigma = 0;
  bool tower_censored = false;
  bool base_censored = false;
  bool start_in_w = false;
  bool start_under_hazard = false;
  std::uint64_t start_code = 0;
  std::uint32_t start_level = 0;
};

// Streams one orbit and scans it with rolling window codes. The ring buffer
// keeps the last few symbols only; codes update in O(1) per base advance by
// dropping the leading symbol. dual also counts against the floor-zero
// copies of the two sets, which keeps the orbit running until both legs end.
class TowerScanner {
 public:
  TowerScanner(const TowerModel& tower, const TowerSet& U, const TowerSet& V,
               std::size_t horizon, bool dual)
      : tower_(tower), u_(U.base), v_(V.base), ulev_(U.level), vlev_(V.level),
        horizon_(horizon), dual_(dual),
        gauss_(std::holds_alternative<GaussDigitModel>(tower.base())) {
    a_ = tower_.alphabet();
    nu_ = u_.word_length();
    nv_ = v_.word_length();
    s_ = tower_.prefix_len();
    lmax_ = std::max(std::max(nu_, nv_), s_);
    std::size_t cap = 1;
    while (cap < lmax_ + 2) cap <<= 1;
    mask_ = cap - 1;
    ring_.assign(cap, 0);
    u_roll_ = u_.encodable();
    v_roll_ = v_.encodable();
    drop_u_ = u_roll_ ? ipow(a_, nu_ - 1) : 0;
    drop_v_ = v_roll_ ? ipow(a_, nv_ - 1) : 0;
    drop_r_ = ipow(a_, s_ - 1);
    scratch_.resize(lmax_);
  }

  PathCounts run(SymbolStream& stream, Rng& cell_rng) {
    PathCounts out;
    filled_ = 0;
    pre_.clear();
    pre_pos_ = 0;

    std::uint32_t start_level = 0;
    const bool trivial = tower_.max_roof() == 1;
    if (!trivial) {
      const auto draw = tower_.draw_cell_level(cell_rng);
      start_level = draw.second;
      out.start_code = draw.first;
      const Word cw = tower_.cell_word(draw.first);
      if (gauss_) {
        const auto cap = std::get<GaussDigitModel>(tower_.base()).digit_cap;
        const GaussInterval cell = gauss_word_interval(cap, cw);
        stream.condition_on_interval(cell.lo, cell.hi);
      } else {
        pre_ = cw;
        if (std::holds_alternative<FiniteMarkovModel>(tower_.base()))
          stream.condition_on_state(cw.back());
      }
    }
    out.start_level = start_level;

    const auto feed = [&](std::size_t upto) {
      while (filled_ <= upto) {
        ring_[filled_ & mask_] = pre_pos_ < pre_.size() ? pre_[pre_pos_++] : stream.next();
        ++filled_;
      }
    };
    feed(lmax_ - 1);
    std::uint64_t cu = 0, cv = 0, cr = 0;
    for (std::size_t i = 0; i < nu_; ++i) cu = cu * a_ + ring_[i & mask_];
    for (std::size_t i = 0; i < nv_; ++i) cv = cv * a_ + ring_[i & mask_];
    for (std::size_t i = 0; i < s_; ++i) cr = cr * a_ + ring_[i & mask_];
    if (trivial) out.start_code = cr;

    out.start_in_w = start_level > 0 && ulev_ >= start_level && in_u(0, cu);
    // any start strictly below its column's hazard point, floor zero included:
    // the lifted hazard fires inside the start column, the floor-zero copy
    // at time zero cannot
    out.start_under_hazard = vlev_ > start_level && in_v(0, cv);

    bool done_t = false;
    bool done_b = !dual_;
    std::size_t t = 0;
    std::uint32_t j = start_level;
    std::uint64_t k = 0;
    for (;;) {
      if (!done_b && (t >= 1 || start_level == 0)) {
        // the orbit passes floor zero of this column
        if (t >= 1 && in_v(t, cv)) done_b = true;
        else if (in_u(t, cu)) ++out.base_sigma;
        if (done_t && done_b) return out;
      }
      const std::uint32_t h = tower_.roof_at(cr);
      for (; j < h; ++j) {
        if (k > horizon_) {
          out.tower_censored = !done_t;
          out.base_censored = dual_ && !done_b;
          return out;
        }
        if (!done_t) {
          if (k >= 1 && j == vlev_ && in_v(t, cv)) done_t = true;
          else if (j == ulev_ && in_u(t, cu)) ++out.tower_sigma;
          if (done_t && done_b) return out;
        }
        ++k;
      }
      feed(t + lmax_);
      if (u_roll_) cu = (cu % drop_u_) * a_ + ring_[(t + nu_) & mask_];
      if (v_roll_) cv = (cv % drop_v_) * a_ + ring_[(t + nv_) & mask_];
      cr = (cr % drop_r_) * a_ + ring_[(t + s_) & mask_];
      ++t;
      j = 0;
    }
  }

 private:
  bool in_u(std::size_t t, std::uint64_t code) {
    return u_roll_ ? u_.contains_code(code) : contains_slow(u_, t, nu_);
  }
  bool in_v(std::size_t t, std::uint64_t code) {
    return v_roll_ ? v_.contains_code(code) : contains_slow(v_, t, nv_);
  }
  bool contains_slow(const CylinderUnion& set, std::size_t t, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) scratch_[i] = ring_[(t + i) & mask_];
    return set.contains(std::span<const Symbol>(scratch_.data(), len));
  }

  const TowerModel& tower_;
  const CylinderUnion& u_;
  const CylinderUnion& v_;
  std::uint32_t ulev_, vlev_;
  std::size_t horizon_;
  bool dual_;
  bool gauss_;
  std::uint64_t a_ = 0;
  std::size_t nu_ = 0, nv_ = 0, s_ = 0, lmax_ = 0, mask_ = 0;
  bool u_roll_ = false, v_roll_ = false;
  std::uint64_t drop_u_ = 0, drop_v_ = 0, drop_r_ = 0;
  std::vector<Symbol> ring_;
  std::vector<Symbol> scratch_;
  std::size_t filled_ = 0;
  Word pre_;
  std::size_t pre_pos_ = 0;
};

}  // namespace

RoofFunction constant_roof(const ProcessModel& model, std::uint32_t height) {
  RoofFunction roof;
  roof.prefix_len = 1;
  roof.values.assign(alphabet_size(model), height);
  return roof;
}

TowerModel::TowerModel(ProcessModel base, RoofFunction roof)
    : base_(std::move(base)), roof_(std::move(roof)) {
  if (roof_.prefix_len == 0)
    throw std::invalid_argument("TowerModel: roof prefix length must be positive");
  if (std::holds_alternative<GaussDigitModel>(base_) && roof_.prefix_len != 1)
    throw std::invalid_argument(
        "TowerModel: continued-fraction roofs must be constant on single digit cells");
  alphabet_ = alphabet_size(base_);
  std::uint64_t cells = 1;
  for (std::size_t i = 0; i < roof_.prefix_len; ++i) {
    cells *= alphabet_;
    if (cells > kMaxCells) throw std::invalid_argument("TowerModel: too many roof cells");
  }
  if (roof_.values.size() != cells)
    throw std::invalid_argument("TowerModel: roof table must have one height per prefix cell");

  cell_measure_.resize(cells);
  size_biased_cum_.resize(cells);
  double cum = 0.0;
  for (std::uint64_t c = 0; c < cells; ++c) {
    const std::uint32_t h = roof_.values[c];
    if (h == 0) throw std::invalid_argument("TowerModel: roof heights must be at least one");
    if (h > kMaxRoof) throw std::invalid_argument("TowerModel: roof too tall");
    max_roof_ = std::max(max_roof_, h);
    cell_measure_[c] = cylinder_measure(base_, cell_word(c));
    cum += cell_measure_[c] * h;
    size_biased_cum_[c] = cum;
  }
  mean_roof_ = cum;

  std::vector<double> by_height(max_roof_, 0.0);
  for (std::uint64_t c = 0; c < cells; ++c)
    by_height[roof_.values[c] - 1] += cell_measure_[c];
  floor_mass_.assign(max_roof_, 0.0);
  double tail = 0.0;
  for (std::size_t k = max_roof_; k-- > 0;) {
    tail += by_height[k];
    floor_mass_[k] = tail / mean_roof_;
  }
}

double TowerModel::cell_measure(std::size_t code) const {
  if (code >= cell_measure_.size())
    throw std::invalid_argument("TowerModel: cell code out of range");
  return cell_measure_[code];
}

std::uint32_t TowerModel::roof_at(std::size_t code) const {
  if (code >= roof_.values.size())
    throw std::invalid_argument("TowerModel: cell code out of range");
  return roof_.values[code];
}

Word TowerModel::cell_word(std::size_t code) const {
  if (code >= roof_.values.size())
    throw std::invalid_argument("TowerModel: cell code out of range");
  Word w(roof_.prefix_len);
  std::size_t c = code;
  for (std::size_t i = roof_.prefix_len; i-- > 0;) {
    w[i] = static_cast<Symbol>(c % alphabet_);
    c /= alphabet_;
  }
  return w;
}

double TowerModel::floor_mass(std::size_t k) const {
  return k < floor_mass_.size() ? floor_mass_[k] : 0.0;
}

std::pair<std::size_t, std::uint32_t> TowerModel::draw_cell_level(Rng& rng) const {
  const double target = rng.next_double() * size_biased_cum_.back();
  std::size_t c = static_cast<std::size_t>(
      std::upper_bound(size_biased_cum_.begin(), size_biased_cum_.end(), target) -
      size_biased_cum_.begin());
  if (c >= size_biased_cum_.size()) c = size_biased_cum_.size() - 1;
  const std::uint32_t h = roof_.values[c];
  std::uint32_t level = 0;
  if (h > 1)
    level = std::min<std::uint32_t>(h - 1, static_cast<std::uint32_t>(rng.next_double() * h));
  return {c, level};
}

TowerPoint tower_step(const TowerModel& tower, const TowerPoint& p,
                      std::span<const Symbol> base_orbit) {
  const std::size_t s = tower.prefix_len();
  if (p.base_index > base_orbit.size() || base_orbit.size() - p.base_index < s)
    throw std::invalid_argument("tower_step: orbit too short at the base index");
  std::uint64_t code = 0;
  for (std::size_t i = 0; i < s; ++i) {
    const Symbol sym = base_orbit[p.base_index + i];
    if (sym >= tower.alphabet())
      throw std::invalid_argument("tower_step: symbol outside the alphabet");
    code = code * tower.alphabet() + sym;
  }
  const std::uint32_t h = tower.roof_at(code);
  if (p.level >= h) throw std::invalid_argument("tower_step: level at or above the roof");
  if (p.level + 1 < h) return {p.base_index, p.level + 1};
  return {p.base_index + 1, 0};
}

TowerSample sample_tower_point(const TowerModel& tower, std::uint64_t seed) {
  Rng rng(seed);
  const auto draw = tower.draw_cell_level(rng);
  return {tower.cell_word(draw.first), draw.second};
}

TowerSet lift_set(const TowerModel& tower, const CylinderUnion& base_set,
                  std::uint32_t level) {
  check_lift(tower, base_set, level, "lift_set");
  return {base_set, level};
}

SimulateResult sigma_tower(const TowerModel& tower, const TowerSet& U, const TowerSet& V,
                           std::size_t n_samples, std::size_t horizon, std::uint64_t seed,
                           unsigned threads) {
  check_lift(tower, U.base, U.level, "sigma_tower");
  check_lift(tower, V.base, V.level, "sigma_tower");
  check_disjoint_projections(U.base, V.base, "sigma_tower");
  if (n_samples == 0) throw std::invalid_argument("sigma_tower: need at least one path");
  if (threads == 0) threads = 1;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_samples));

  struct Tally {
    std::vector<std::uint64_t> hist;
    std::uint64_t censored = 0;
  };
  std::vector<Tally> tallies(threads);
  const auto worker = [&](unsigned c) {
    SymbolStream stream(tower.base(), 0);
    TowerScanner scanner(tower, U, V, horizon, false);
    Tally& tally = tallies[c];
    for (std::size_t i = c; i < n_samples; i += threads) {
      const std::uint64_t path_seed = derive_seed(seed, i);
      stream.reseed(path_seed);
      Rng cell_rng(mix64(path_seed));
      const PathCounts pc = scanner.run(stream, cell_rng);
      if (pc.tower_censored) {
        ++tally.censored;
        continue;
      }
      if (pc.tower_sigma >= tally.hist.size()) tally.hist.resize(pc.tower_sigma + 1, 0);
      ++tally.hist[pc.tower_sigma];
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

TransferReport count_transfer_check(const TowerModel& tower, const TowerSet& U,
                                    const TowerSet& V, std::size_t horizon,
                                    std::uint64_t seed) {
  check_lift(tower, U.base, U.level, "count_transfer_check");
  check_lift(tower, V.base, V.level, "count_transfer_check");
  check_disjoint_projections(U.base, V.base, "count_transfer_check");

  // the orbit with seed s is exactly path zero of sigma_tower(seed s)
  SymbolStream stream(tower.base(), 0);
  TowerScanner scanner(tower, U, V, horizon, true);
  const std::uint64_t path_seed = derive_seed(seed, 0);
  stream.reseed(path_seed);
  Rng cell_rng(mix64(path_seed));
  const PathCounts pc = scanner.run(stream, cell_rng);

  TransferReport rep;
  rep.censored = pc.tower_censored || pc.base_censored;
  rep.start_above_target = pc.start_in_w;
  rep.start_below_hazard = pc.start_under_hazard;
  rep.tower_count = pc.tower_sigma;
  rep.base_count = pc.base_sigma;
  rep.start_cell = tower.cell_word(pc.start_code);
  rep.start_level = pc.start_level;
  if (!rep.censored) {
    rep.holds = pc.start_under_hazard
                    ? pc.tower_sigma == 0
                    : pc.tower_sigma == pc.base_sigma + (pc.start_in_w ? 1 : 0);
  }
  return rep;
}

}  // namespace hazret
