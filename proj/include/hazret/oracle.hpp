#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <vector>

#include "hazret/measures.hpp"
#include "hazret/pmf.hpp"
#include "hazret/word.hpp"

namespace hazret {

// Markov chain on the positive-measure words of a fixed window length.
// State w steps to w' exactly when w' drops the first symbol of w and
// appends one new final symbol.
struct WindowChain {
  std::size_t window_length = 0;
  std::uint32_t alphabet = 0;
  std::vector<std::uint64_t> codes;  // sorted base-alphabet codes of the states
  Eigen::VectorXd init;              // stationary measure of each state word
  Eigen::SparseMatrix<double, Eigen::RowMajor> trans;  // row-stochastic

  std::size_t state_count() const { return codes.size(); }
  Word word_of(std::size_t index) const;
  // Index of a state word; throws std::invalid_argument if absent.
  std::size_t state_index(const Word& w) const;
};

// Exact window chain for an iid or finite Markov model. Throws on Gauss
// models (no finite window state space) and when alphabet^L exceeds 2e6.
WindowChain build_window_chain(const ProcessModel& model, std::size_t L);

// Exact law of the number of U-window visits strictly before the first
// V-window visit, for the chain started from its stationary measure.
// U and V words must be no longer than the window; membership is lifted to
// windows by prefix. A window in both sets counts as a hazard hit only, so
// the returned law equals the one for U minus V.
// probs[j] = P(count = j) for j <= K and tail = P(count > K), via one
// sparse factorization reused across K+1 right-hand sides.
// Throws std::runtime_error if the hazard set is unreachable from part of
// the state space or a solve residual exceeds 1e-10.
Pmf exact_sigma_distribution(const WindowChain& chain, const CylinderUnion& U,
                             const CylinderUnion& V, std::size_t K);

// Forward dynamic-programming cross-check of the same law, truncated at
// T_max steps. residual is the mass not yet absorbed at the horizon; it is
// folded into pmf.tail so the pmf still carries total mass 1.
struct SigmaDpResult {
  Pmf pmf;
  double residual = 0.0;
};

SigmaDpResult exact_sigma_dp(const WindowChain& chain, const CylinderUnion& U,
                             const CylinderUnion& V, std::size_t K, std::size_t T_max);

}  // namespace hazret
