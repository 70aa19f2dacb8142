#include "hazret/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "json.hpp"

namespace hazret {

namespace {

constexpr double kLn2 = 0.6931471805599453094172321214581766;

void check_probability_vector(const Eigen::VectorXd& p, const char* what) {
  if (p.size() < 2) throw std::invalid_argument(std::string(what) + ": need at least 2 symbols");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0)) throw std::invalid_argument(std::string(what) + ": entries must be positive");
    sum += p[i];
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument(std::string(what) + ": entries must sum to 1");
}

// Strong connectivity and aperiodicity of the positive-entry digraph.
void check_irreducible_aperiodic(const Eigen::MatrixXd& Q) {
  const Eigen::Index s = Q.rows();
  auto bfs = [&](bool forward) {
    std::vector<int> level(s, -1);
    std::queue<Eigen::Index> q;
    level[0] = 0;
    q.push(0);
    while (!q.empty()) {
      const Eigen::Index u = q.front();
      q.pop();
      for (Eigen::Index v = 0; v < s; ++v) {
        const double w = forward ? Q(u, v) : Q(v, u);
        if (w > 0.0 && level[v] < 0) {
          level[v] = level[u] + 1;
          q.push(v);
        }
      }
    }
    return level;
  };
  const auto fwd = bfs(true);
  const auto bwd = bfs(false);
  for (Eigen::Index i = 0; i < s; ++i)
    if (fwd[i] < 0 || bwd[i] < 0)
      throw std::invalid_argument("markov: chain is reducible");
  long long g = 0;
  for (Eigen::Index u = 0; u < s; ++u)
    for (Eigen::Index v = 0; v < s; ++v)
      if (Q(u, v) > 0.0)
        g = std::gcd(g, static_cast<long long>(std::abs(fwd[u] + 1 - fwd[v])));
  if (g != 1) throw std::invalid_argument("markov: chain is periodic");
}

Eigen::MatrixXd matrix_power(Eigen::MatrixXd base, long long e) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(base.rows(), base.cols());
  while (e > 0) {
    if (e & 1) acc = acc * base;
    base = base * base;
    e >>= 1;
  }
  return acc;
}

const char* kOverflowPlacement =
    "gauss: overflow symbol admitted only at the first or last position";

}  // namespace

IIDModel::IIDModel(Eigen::VectorXd p) : probs(std::move(p)) {
  check_probability_vector(probs, "iid probs");
}

FiniteMarkovModel::FiniteMarkovModel(Eigen::MatrixXd q) : Q(std::move(q)) {
  if (Q.rows() != Q.cols() || Q.rows() < 2)
    throw std::invalid_argument("markov: Q must be square with at least 2 states");
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < Q.cols(); ++j) {
      if (Q(i, j) < 0.0) {
        if (Q(i, j) < -1e-15) throw std::invalid_argument("markov: negative entry in Q");
        Q(i, j) = 0.0;
      }
      sum += Q(i, j);
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("markov: rows of Q must sum to 1");
  }
  check_irreducible_aperiodic(Q);
  pi = stationary_distribution(Q);
}

std::size_t alphabet_size(const ProcessModel& model) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IIDModel>) return static_cast<std::size_t>(m.probs.size());
        else if constexpr (std::is_same_v<T, FiniteMarkovModel>) return static_cast<std::size_t>(m.Q.rows());
        else return m.digit_cap + 1;
      },
      model);
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& Q) {
  if (Q.rows() != Q.cols() || Q.rows() < 2)
    throw std::invalid_argument("stationary_distribution: Q must be square");
  check_irreducible_aperiodic(Q);
  const Eigen::Index s = Q.rows();
  Eigen::VectorXd pi(s);
  if (s <= 512) {
    Eigen::MatrixXd A = Q.transpose() - Eigen::MatrixXd::Identity(s, s);
    A.row(s - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(s);
    b[s - 1] = 1.0;
    pi = A.colPivHouseholderQr().solve(b);
  } else {
    pi.setConstant(1.0 / static_cast<double>(s));
    const Eigen::MatrixXd Qt = Q.transpose();
    for (int it = 0; it < 1000000; ++it) {
      Eigen::VectorXd nxt = Qt * pi;
      nxt /= nxt.sum();
      const double delta = (nxt - pi).cwiseAbs().maxCoeff();
      pi = std::move(nxt);
      if (delta < 1e-14) break;
    }
  }
  for (Eigen::Index i = 0; i < s; ++i) pi[i] = std::max(pi[i], 0.0);
  pi /= pi.sum();
  const double residual = (Q.transpose() * pi - pi).cwiseAbs().maxCoeff();
  if (residual > 1e-10)
    throw std::runtime_error("stationary_distribution: residual above 1e-10");
  return pi;
}

GaussInterval gauss_word_interval(std::uint32_t digit_cap, const Word& w) {
  if (w.empty()) return GaussInterval{0.0, 1.0, 1.0};
  // Tail range in the last coordinate: (0,1), or the overflow wedge.
  double a = 0.0, b = 1.0;
  std::size_t ndigits = w.size();
  if (w.back() == digit_cap) {
    b = 1.0 / (static_cast<double>(digit_cap) + 1.0);
    --ndigits;
  }
  double pkm1 = 1.0, pk = 0.0, qkm1 = 0.0, qk = 1.0;  // empty continued fraction
  for (std::size_t i = 0; i < ndigits; ++i) {
    if (w[i] >= digit_cap) throw std::invalid_argument(kOverflowPlacement);
    const double d = static_cast<double>(w[i]) + 1.0;
    const double pn = d * pk + pkm1;
    const double qn = d * qk + qkm1;
    pkm1 = pk; pk = pn;
    qkm1 = qk; qk = qn;
    if (qk > 1e150) {
      // Deeper digits only shrink the cell below representable width.
      const double x = (pk + pkm1 * a) / (qk + qkm1 * a);
      return GaussInterval{x, x, 0.0};
    }
  }
  const double xa = (pk + pkm1 * a) / (qk + qkm1 * a);
  const double xb = (pk + pkm1 * b) / (qk + qkm1 * b);
  GaussInterval out;
  out.lo = std::min(xa, xb);
  out.hi = std::max(xa, xb);
  // |det| of the Moebius map is 1, so the width has this product form.
  out.width = (b - a) / ((qk + qkm1 * a) * (qk + qkm1 * b));
  return out;
}

double gauss_interval_measure(double lo, double hi) {
  if (!(lo >= 0.0) || !(hi <= 1.0) || !(lo <= hi))
    throw std::invalid_argument("gauss_interval_measure: need 0 <= lo <= hi <= 1");
  return std::log1p((hi - lo) / (1.0 + lo)) / kLn2;
}

namespace {

double gauss_cylinder_measure(const GaussDigitModel& g, const Word& w) {
  for (Symbol s : w)
    if (s > g.digit_cap) throw std::invalid_argument("gauss: symbol out of alphabet");
  if (w.front() == g.digit_cap && w.size() > 1) {
    // Leading overflow: sum over digits d > cap of the branch images of the
    // rest-interval telescopes to log2((cap+1+hi)/(cap+1+lo)).
    const Word rest(w.begin() + 1, w.end());
    const GaussInterval it = gauss_word_interval(g.digit_cap, rest);
    const double base = static_cast<double>(g.digit_cap) + 1.0;
    return std::log1p(it.width / (base + it.lo)) / kLn2;
  }
  const GaussInterval it = gauss_word_interval(g.digit_cap, w);
  return std::log1p(it.width / (1.0 + it.lo)) / kLn2;
}

}  // namespace

double cylinder_measure(const ProcessModel& model, const Word& w) {
  if (w.empty()) throw std::invalid_argument("cylinder_measure: empty word");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, IIDModel>) {
          double p = 1.0;
          for (Symbol s : w) {
            if (s >= static_cast<std::size_t>(m.probs.size()))
              throw std::invalid_argument("iid: symbol out of alphabet");
            p *= m.probs[s];
          }
          return p;
        } else if constexpr (std::is_same_v<T, FiniteMarkovModel>) {
          const auto s = static_cast<std::size_t>(m.Q.rows());
          if (w[0] >= s) throw std::invalid_argument("markov: symbol out of alphabet");
          double p = m.pi[w[0]];
          for (std::size_t i = 0; i + 1 < w.size(); ++i) {
            if (w[i + 1] >= s) throw std::invalid_argument("markov: symbol out of alphabet");
            p *= m.Q(w[i], w[i + 1]);
          }
          return p;
        } else {
          return gauss_cylinder_measure(m, w);
        }
      },
      model);
}

double set_measure(const ProcessModel& model, const CylinderUnion& U) {
  if (U.alphabet_size() != alphabet_size(model))
    throw std::invalid_argument("set_measure: alphabet mismatch");
  double total = 0.0;
  for (const Word& w : U.words()) total += cylinder_measure(model, w);
  return total;
}

SymbolStream::SymbolStream(const ProcessModel& model, std::uint64_t seed) : rng_(seed) {
  if (const auto* iid = std::get_if<IIDModel>(&model)) {
    kind_ = Kind::Iid;
    init_cum_ = cumulative(std::span<const double>(iid->probs.data(),
                                                   static_cast<std::size_t>(iid->probs.size())));
  } else if (const auto* mk = std::get_if<FiniteMarkovModel>(&model)) {
    kind_ = Kind::Markov;
    init_cum_ = cumulative(std::span<const double>(mk->pi.data(),
                                                   static_cast<std::size_t>(mk->pi.size())));
    const auto s = static_cast<std::size_t>(mk->Q.rows());
    row_cum_.resize(s);
    for (std::size_t i = 0; i < s; ++i) {
      std::vector<double> row(s);
      for (std::size_t j = 0; j < s; ++j) row[j] = mk->Q(i, j);
      row_cum_[i] = cumulative(row);
    }
  } else {
    kind_ = Kind::Gauss;
    cap_ = std::get<GaussDigitModel>(model).digit_cap;
  }
}

Symbol SymbolStream::next() {
  switch (kind_) {
    case Kind::Iid:
      return static_cast<Symbol>(rng_.sample_cumulative(init_cum_));
    case Kind::Markov:
      state_ = static_cast<Symbol>(started_ ? rng_.sample_cumulative(row_cum_[state_])
                                            : rng_.sample_cumulative(init_cum_));
      started_ = true;
      return state_;
    case Kind::Gauss: {
      if (!started_) {
        x_ = std::exp2(rng_.next_double()) - 1.0;  // stationary start
        started_ = true;
      }
      if (x_ < 1e-300) {
        // Numerically exhausted tail (probability-zero region); restart the
        // tail uniformly so the stream stays well defined and deterministic.
        x_ = rng_.next_double();
        return cap_;
      }
      const double inv = 1.0 / x_;
      const double d = std::floor(inv);
      x_ = inv - d;
      if (d > static_cast<double>(cap_)) return cap_;
      return static_cast<Symbol>(d) - 1;
    }
  }
  return 0;
}

void SymbolStream::reseed(std::uint64_t seed) {
  rng_ = Rng(seed);
  started_ = false;
  state_ = 0;
  x_ = 0.0;
}

void SymbolStream::condition_on_state(Symbol last) {
  if (kind_ == Kind::Gauss)
    throw std::invalid_argument("SymbolStream: state conditioning is for iid/markov");
  if (kind_ == Kind::Markov) {
    if (last >= row_cum_.size()) throw std::invalid_argument("SymbolStream: state out of range");
    state_ = last;
  }
  started_ = true;
}

void SymbolStream::condition_on_interval(double lo, double hi) {
  if (kind_ != Kind::Gauss)
    throw std::invalid_argument("SymbolStream: interval conditioning is for gauss");
  if (!(lo >= 0.0) || !(hi <= 1.0) || !(lo < hi))
    throw std::invalid_argument("SymbolStream: bad conditioning interval");
  const double glo = std::log2(1.0 + lo), ghi = std::log2(1.0 + hi);
  const double t = glo + rng_.next_double() * (ghi - glo);
  x_ = std::min(std::max(std::exp2(t) - 1.0, lo), std::nextafter(hi, lo));
  started_ = true;
}

std::vector<Symbol> sample_path(const ProcessModel& model, std::size_t length,
                                std::uint64_t seed) {
  if (length == 0) throw std::invalid_argument("sample_path: length must be >= 1");
  SymbolStream stream(model, seed);
  std::vector<Symbol> out(length);
  for (auto& s : out) s = stream.next();
  return out;
}

double phi_markov_exact(const FiniteMarkovModel& model, int n) {
  if (n < 1) throw std::invalid_argument("phi_markov_exact: n must be >= 1");
  const Eigen::MatrixXd A = matrix_power(model.Q, n);
  double best = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    if (!(model.pi[i] > 0.0)) continue;
    double tv = 0.0;
    for (Eigen::Index j = 0; j < A.cols(); ++j) tv += std::abs(A(i, j) - model.pi[j]);
    best = std::max(best, 0.5 * tv);
  }
  return best;
}

double phi_cylinder_lower(const ProcessModel& model, int n, int max_event_len,
                          std::size_t budget) {
  if (n < 1 || max_event_len < 1)
    throw std::invalid_argument("phi_cylinder_lower: n and event length must be >= 1");
  if (std::holds_alternative<GaussDigitModel>(model))
    throw std::invalid_argument("phi_cylinder_lower: exact joint probabilities require iid/markov");
  const std::size_t s = alphabet_size(model);
  double event_count = 0.0;
  for (int l = 1, c = 1; l <= max_event_len; ++l) {
    c = static_cast<int>(std::min<double>(c * static_cast<double>(s), 1e18));
    event_count += c;
  }
  if (event_count * event_count > static_cast<double>(budget))
    throw std::invalid_argument("phi_cylinder_lower: event budget exceeded");

  const int L = max_event_len;
  if (const auto* iid = std::get_if<IIDModel>(&model)) {
    (void)iid;
    return 0.0;  // joints factorize exactly; the sup over cylinder pairs is 0
  }
  const auto& mk = std::get<FiniteMarkovModel>(model);
  // Gap between the last past index (l1-1) and the future anchor (L-1+n).
  std::vector<Eigen::MatrixXd> pow_cache;  // Q^(n+L-l1) for l1 = L..1
  pow_cache.push_back(matrix_power(mk.Q, n));
  for (int extra = 1; extra < L; ++extra) pow_cache.push_back(pow_cache.back() * mk.Q);

  // Last symbols reachable by a positive-probability word of each length.
  std::vector<std::vector<bool>> reach(L + 1, std::vector<bool>(s, false));
  for (std::size_t i = 0; i < s; ++i) reach[1][i] = mk.pi[i] > 0.0;
  for (int l = 2; l <= L; ++l)
    for (std::size_t i = 0; i < s; ++i)
      if (reach[l - 1][i])
        for (std::size_t j = 0; j < s; ++j)
          if (mk.Q(i, j) > 0.0) reach[l][j] = true;

  double best = 0.0;
  for (int l1 = 1; l1 <= L; ++l1) {
    const Eigen::MatrixXd& G = pow_cache[static_cast<std::size_t>(L - l1)];
    for (std::size_t i = 0; i < s; ++i) {
      if (!reach[l1][i]) continue;
      // Future word w enumerated by an odometer over lengths 1..L.
      for (int l2 = 1; l2 <= L; ++l2) {
        Word w(static_cast<std::size_t>(l2), 0);
        while (true) {
          double prod = 1.0;
          for (int t = 0; t + 1 < l2; ++t) prod *= mk.Q(w[t], w[t + 1]);
          best = std::max(best, std::abs(G(i, w[0]) - mk.pi[w[0]]) * prod);
          int pos = l2 - 1;
          while (pos >= 0 && w[pos] == s - 1) w[pos--] = 0;
          if (pos < 0) break;
          ++w[pos];
        }
      }
    }
  }
  return best;
}

DecayReport cylinder_decay_check(const ProcessModel& model, int depth_lo, int depth_hi) {
  if (depth_lo < 1 || depth_hi <= depth_lo)
    throw std::invalid_argument("cylinder_decay_check: need 1 <= depth_lo < depth_hi");
  DecayReport rep;
  for (int n = depth_lo; n <= depth_hi; ++n) {
    rep.depths.push_back(n);
    const double m = std::visit(
        [&](const auto& mm) -> double {
          using T = std::decay_t<decltype(mm)>;
          if constexpr (std::is_same_v<T, IIDModel>) {
            return std::pow(mm.probs.maxCoeff(), n);
          } else if constexpr (std::is_same_v<T, FiniteMarkovModel>) {
            Eigen::VectorXd v = mm.pi;  // max-product dynamic program
            for (int step = 1; step < n; ++step) {
              Eigen::VectorXd nxt = Eigen::VectorXd::Zero(v.size());
              for (Eigen::Index i = 0; i < v.size(); ++i)
                for (Eigen::Index j = 0; j < v.size(); ++j)
                  nxt[j] = std::max(nxt[j], v[i] * mm.Q(i, j));
              v = std::move(nxt);
            }
            return v.maxCoeff();
          } else {
            // The all-ones digit word has the widest cell at every depth
            // (minimal continuants), so it realizes the maximum.
            return gauss_cylinder_measure(mm, Word(static_cast<std::size_t>(n), 0));
          }
        },
        model);
    rep.max_measure.push_back(m);
  }
  const std::size_t k = rep.depths.size();
  double nbar = 0.0, ybar = 0.0;
  std::vector<double> y(k);
  for (std::size_t i = 0; i < k; ++i) {
    y[i] = -std::log(rep.max_measure[i]);
    nbar += rep.depths[i];
    ybar += y[i];
  }
  nbar /= static_cast<double>(k);
  ybar /= static_cast<double>(k);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    num += (rep.depths[i] - nbar) * (y[i] - ybar);
    den += (rep.depths[i] - nbar) * (rep.depths[i] - nbar);
  }
  rep.rate = num / den;
  return rep;
}

ProcessModel model_from_json_text(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("model: JSON parse error: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw std::invalid_argument("model/kind: expected a string");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "iid") {
    if (!j.contains("probs") || !j["probs"].is_array())
      throw std::invalid_argument("model/probs: expected an array of numbers");
    const auto& arr = j["probs"];
    Eigen::VectorXd p(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number())
        throw std::invalid_argument("model/probs/" + std::to_string(i) + ": expected a number");
      p[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    }
    return IIDModel(std::move(p));
  }
  if (kind == "markov") {
    if (!j.contains("Q") || !j["Q"].is_array())
      throw std::invalid_argument("model/Q: expected an array of rows");
    const auto& rows = j["Q"];
    const std::size_t s = rows.size();
    Eigen::MatrixXd Q(s, s);
    for (std::size_t i = 0; i < s; ++i) {
      if (!rows[i].is_array() || rows[i].size() != s)
        throw std::invalid_argument("model/Q/" + std::to_string(i) + ": expected a row of length " +
                                    std::to_string(s));
      for (std::size_t c = 0; c < s; ++c) {
        if (!rows[i][c].is_number())
          throw std::invalid_argument("model/Q/" + std::to_string(i) + "/" + std::to_string(c) +
                                      ": expected a number");
        Q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c].get<double>();
      }
    }
    return FiniteMarkovModel(std::move(Q));
  }
  if (kind == "gauss") {
    GaussDigitModel g;
    if (j.contains("digit_cap")) {
      if (!j["digit_cap"].is_number_unsigned() || j["digit_cap"].get<std::uint64_t>() < 2 ||
          j["digit_cap"].get<std::uint64_t>() > 4096)
        throw std::invalid_argument("model/digit_cap: expected an integer in [2, 4096]");
      g.digit_cap = j["digit_cap"].get<std::uint32_t>();
    }
    return g;
  }
  throw std::invalid_argument("model/kind: unknown kind \"" + kind + "\"");
}

}  // namespace hazret
