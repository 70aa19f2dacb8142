#include "hazret/oracle.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <variant>

namespace hazret {

namespace {

std::uint64_t upow(std::uint64_t base, std::size_t e) {
  std::uint64_t v = 1;
  for (std::size_t i = 0; i < e; ++i) v *= base;
  return v;
}

void decode(std::uint64_t code, std::uint32_t s, std::size_t L, Word& out) {
  out.resize(L);
  for (std::size_t i = L; i-- > 0;) {
    out[i] = static_cast<Symbol>(code % s);
    code /= s;
  }
}

// Window membership masks. A window is a hazard window when the V-prefix
// matches; it counts as a return window only when it is not a hazard window,
// since the count stops at the hazard anyway.
struct Lift {
  std::vector<char> inU, inV;
  std::size_t nU = 0, nV = 0;
};

Lift lift_sets(const WindowChain& ch, const CylinderUnion& U, const CylinderUnion& V) {
  if (U.alphabet_size() != ch.alphabet || V.alphabet_size() != ch.alphabet)
    throw std::invalid_argument("sigma oracle: set alphabet does not match the chain");
  if (U.word_length() > ch.window_length || V.word_length() > ch.window_length)
    throw std::invalid_argument("sigma oracle: set word length exceeds the window");
  const std::uint64_t divU = upow(ch.alphabet, ch.window_length - U.word_length());
  const std::uint64_t divV = upow(ch.alphabet, ch.window_length - V.word_length());
  Lift lift;
  const std::size_t N = ch.state_count();
  lift.inU.assign(N, 0);
  lift.inV.assign(N, 0);
  for (std::size_t i = 0; i < N; ++i) {
    const bool v = V.contains_code(ch.codes[i] / divV);
    const bool u = !v && U.contains_code(ch.codes[i] / divU);
    lift.inV[i] = v;
    lift.inU[i] = u;
    lift.nV += v;
    lift.nU += u;
  }
  return lift;
}

// Reusable solver for (I - P_sub) x = rhs: direct factorization while the
// block is small, preconditioned iterations beyond.
class AbsorbingSolver {
 public:
  explicit AbsorbingSolver(const Eigen::SparseMatrix<double>& A) : A_(A) {
    if (A_.rows() <= 200000) {
      lu_ = std::make_unique<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
      lu_->compute(A_);
      if (lu_->info() != Eigen::Success)
        throw std::runtime_error("sigma oracle: absorbing system is singular");
    } else {
      it_ = std::make_unique<
          Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>>>();
      it_->setTolerance(1e-13);
      it_->compute(A_);
      if (it_->info() != Eigen::Success)
        throw std::runtime_error("sigma oracle: absorbing system preconditioner failed");
    }
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x;
    if (lu_) x = lu_->solve(rhs);
    else x = it_->solve(rhs);
    const double resid = (A_ * x - rhs).cwiseAbs().maxCoeff();
    if (!(resid <= 1e-10))
      throw std::runtime_error("sigma oracle: solve residual above 1e-10");
    return x;
  }

 private:
  Eigen::SparseMatrix<double> A_;
  std::unique_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
  std::unique_ptr<
      Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>>>
      it_;
};

}  // namespace

Word WindowChain::word_of(std::size_t index) const {
  if (index >= codes.size()) throw std::invalid_argument("window chain: state index out of range");
  Word w;
  decode(codes[index], alphabet, window_length, w);
  return w;
}

std::size_t WindowChain::state_index(const Word& w) const {
  if (w.size() != window_length)
    throw std::invalid_argument("window chain: word length does not match the window");
  std::uint64_t code = 0;
  for (Symbol sym : w) {
    if (sym >= alphabet) throw std::invalid_argument("window chain: symbol out of range");
    code = code * alphabet + sym;
  }
  const auto it = std::lower_bound(codes.begin(), codes.end(), code);
  if (it == codes.end() || *it != code)
    throw std::invalid_argument("window chain: word has measure zero");
  return static_cast<std::size_t>(it - codes.begin());
}

WindowChain build_window_chain(const ProcessModel& model, std::size_t L) {
  if (std::holds_alternative<GaussDigitModel>(model))
    throw std::invalid_argument("window chain: model has no finite window state space");
  if (L == 0) throw std::invalid_argument("window chain: window length must be positive");
  const std::uint32_t s = alphabet_size(model);
  if (std::pow(static_cast<double>(s), static_cast<double>(L)) > 2e6)
    throw std::invalid_argument("window chain: alphabet^L exceeds the 2e6 state guard");
  const std::uint64_t total = upow(s, L);

  const auto* iid = std::get_if<IIDModel>(&model);
  const auto* mk = std::get_if<FiniteMarkovModel>(&model);

  WindowChain ch;
  ch.window_length = L;
  ch.alphabet = s;
  std::vector<double> mass;
  Word w;
  for (std::uint64_t code = 0; code < total; ++code) {
    decode(code, s, L, w);
    double mu;
    if (iid) {
      mu = iid->probs[w[0]];
      for (std::size_t i = 1; i < L; ++i) mu *= iid->probs[w[i]];
    } else {
      mu = mk->pi[w[0]];
      for (std::size_t i = 1; i < L; ++i) mu *= mk->Q(w[i - 1], w[i]);
    }
    if (mu > 0.0) {
      ch.codes.push_back(code);
      mass.push_back(mu);
    }
  }
  const std::size_t N = ch.codes.size();
  ch.init = Eigen::Map<const Eigen::VectorXd>(mass.data(), static_cast<Eigen::Index>(N));

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(N * s);
  const std::uint64_t tail_mod = upow(s, L - 1);
  for (std::size_t i = 0; i < N; ++i) {
    const std::uint64_t code = ch.codes[i];
    const Symbol last = static_cast<Symbol>(code % s);
    const std::uint64_t base = (code % tail_mod) * s;
    for (Symbol b = 0; b < s; ++b) {
      const double p = iid ? iid->probs[b] : mk->Q(last, b);
      if (p <= 0.0) continue;
      const auto it = std::lower_bound(ch.codes.begin(), ch.codes.end(), base + b);
      if (it == ch.codes.end() || *it != base + b)
        throw std::runtime_error("window chain: inconsistent state enumeration");
      trip.emplace_back(static_cast<int>(i), static_cast<int>(it - ch.codes.begin()), p);
    }
  }
  ch.trans.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  ch.trans.setFromTriplets(trip.begin(), trip.end());
  return ch;
}

Pmf exact_sigma_distribution(const WindowChain& chain, const CylinderUnion& U,
                             const CylinderUnion& V, std::size_t K) {
  const Lift lift = lift_sets(chain, U, V);
  const std::size_t N = chain.state_count();
  if (lift.nV == 0)
    throw std::runtime_error("sigma oracle: hazard set has no positive-measure window");

  // Partition states: hazard windows absorb, return windows feed the
  // previous count, the rest stay within the current count.
  std::vector<int> local(N);
  std::vector<std::size_t> free_ids, u_ids;
  for (std::size_t i = 0; i < N; ++i) {
    if (lift.inV[i]) continue;
    if (lift.inU[i]) {
      local[i] = static_cast<int>(u_ids.size());
      u_ids.push_back(i);
    } else {
      local[i] = static_cast<int>(free_ids.size());
      free_ids.push_back(i);
    }
  }
  const auto nF = static_cast<Eigen::Index>(free_ids.size());
  const auto nU = static_cast<Eigen::Index>(u_ids.size());

  std::vector<Eigen::Triplet<double>> tFF, tFU, tFV, tU, tDD;
  std::vector<int> dLocal(N, -1);  // non-hazard states, for the reachability system
  std::size_t nD = 0;
  for (std::size_t i = 0; i < N; ++i)
    if (!lift.inV[i]) dLocal[i] = static_cast<int>(nD++);
  Eigen::VectorXd toV = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nD));

  for (std::size_t i = 0; i < N; ++i) {
    if (lift.inV[i]) continue;
    const bool isU = lift.inU[i];
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(
             chain.trans, static_cast<Eigen::Index>(i));
         it; ++it) {
      const auto j = static_cast<std::size_t>(it.col());
      if (lift.inV[j]) toV[dLocal[i]] += it.value();
      else tDD.emplace_back(dLocal[i], dLocal[j], it.value());
      if (isU) {
        tU.emplace_back(local[i], static_cast<int>(j), it.value());
      } else {
        if (lift.inV[j]) tFV.emplace_back(local[i], 0, it.value());
        else if (lift.inU[j]) tFU.emplace_back(local[i], local[j], it.value());
        else tFF.emplace_back(local[i], local[j], it.value());
      }
    }
  }

  // Every state must reach the hazard set with probability 1.
  if (nD > 0) {
    std::vector<Eigen::Triplet<double>> tA;
    tA.reserve(tDD.size() + nD);
    for (std::size_t k = 0; k < nD; ++k)
      tA.emplace_back(static_cast<int>(k), static_cast<int>(k), 1.0);
    for (const auto& t : tDD) tA.emplace_back(t.row(), t.col(), -t.value());
    Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(nD),
                                  static_cast<Eigen::Index>(nD));
    A.setFromTriplets(tA.begin(), tA.end());
    const AbsorbingSolver solver(A);
    const Eigen::VectorXd reach = solver.solve(toV);
    double absorbed = 0.0;
    for (std::size_t i = 0; i < N; ++i)
      absorbed += lift.inV[i] ? chain.init[static_cast<Eigen::Index>(i)]
                              : chain.init[static_cast<Eigen::Index>(i)] * reach[dLocal[i]];
    if (absorbed < 1.0 - 1e-9)
      throw std::runtime_error("sigma oracle: hazard set unreachable from positive-measure states");
  }

  Eigen::SparseMatrix<double> Pff(nF, nF), Pfu(nF, nU), Pfv(nF, 1);
  Eigen::SparseMatrix<double, Eigen::RowMajor> Pu(nU, static_cast<Eigen::Index>(N));
  Pff.setFromTriplets(tFF.begin(), tFF.end());
  Pfu.setFromTriplets(tFU.begin(), tFU.end());
  Pfv.setFromTriplets(tFV.begin(), tFV.end());
  Pu.setFromTriplets(tU.begin(), tU.end());

  std::optional<AbsorbingSolver> solver;
  if (nF > 0) {
    std::vector<Eigen::Triplet<double>> tA;
    tA.reserve(tFF.size() + static_cast<std::size_t>(nF));
    for (Eigen::Index k = 0; k < nF; ++k) tA.emplace_back(k, k, 1.0);
    for (const auto& t : tFF) tA.emplace_back(t.row(), t.col(), -t.value());
    Eigen::SparseMatrix<double> A(nF, nF);
    A.setFromTriplets(tA.begin(), tA.end());
    solver.emplace(A);
  }

  Pmf out;
  out.probs.assign(K + 1, 0.0);
  Eigen::VectorXd f_prev = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
  double mass = 0.0;
  for (std::size_t j = 0; j <= K; ++j) {
    Eigen::VectorXd fU = Pu * f_prev;  // returns consume one count
    Eigen::VectorXd rhs = Pfu * fU;
    if (j == 0) rhs += Pfv * Eigen::VectorXd::Ones(1);
    const Eigen::VectorXd fF = nF > 0 ? solver->solve(rhs) : Eigen::VectorXd();
    Eigen::VectorXd f_cur(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) {
      if (lift.inV[i]) f_cur[static_cast<Eigen::Index>(i)] = j == 0 ? 1.0 : 0.0;
      else if (lift.inU[i]) f_cur[static_cast<Eigen::Index>(i)] = fU[local[i]];
      else f_cur[static_cast<Eigen::Index>(i)] = fF[local[i]];
    }
    out.probs[j] = std::max(0.0, chain.init.dot(f_cur));
    mass += out.probs[j];
    f_prev.swap(f_cur);
  }
  out.tail = std::max(0.0, 1.0 - mass);
  return out;
}

SigmaDpResult exact_sigma_dp(const WindowChain& chain, const CylinderUnion& U,
                             const CylinderUnion& V, std::size_t K, std::size_t T_max) {
  const Lift lift = lift_sets(chain, U, V);
  const std::size_t N = chain.state_count();
  if (lift.nV == 0)
    throw std::runtime_error("sigma oracle: hazard set has no positive-measure window");

  const Eigen::SparseMatrix<double> Pt = chain.trans.transpose();
  // Layer j holds the mass of paths that counted j returns so far; the last
  // layer pools everything beyond K.
  std::vector<Eigen::VectorXd> layer(K + 2,
                                     Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N)));
  layer[0] = chain.init;
  std::vector<double> absorbed(K + 1, 0.0);
  double beyond = 0.0;

  const auto absorb = [&] {
    for (std::size_t j = 0; j < layer.size(); ++j)
      for (std::size_t i = 0; i < N; ++i)
        if (lift.inV[i]) {
          const double m = layer[j][static_cast<Eigen::Index>(i)];
          if (j <= K) absorbed[j] += m;
          else beyond += m;
          layer[j][static_cast<Eigen::Index>(i)] = 0.0;
        }
  };

  for (std::size_t t = 0; t < T_max; ++t) {
    absorb();
    for (std::size_t j = K + 1; j-- > 0;)  // counts bump upward, highest first
      for (std::size_t i = 0; i < N; ++i)
        if (lift.inU[i]) {
          layer[j + 1][static_cast<Eigen::Index>(i)] += layer[j][static_cast<Eigen::Index>(i)];
          layer[j][static_cast<Eigen::Index>(i)] = 0.0;
        }
    for (auto& m : layer) m = Pt * m;
  }
  absorb();

  double residual = 0.0;
  for (const auto& m : layer) residual += m.sum();

  SigmaDpResult out;
  out.residual = residual;
  out.pmf.probs = absorbed;
  out.pmf.tail = beyond + residual;  // unabsorbed mass is reported beyond K
  return out;
}

}  // namespace hazret
