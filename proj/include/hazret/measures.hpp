#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "hazret/rng.hpp"
#include "hazret/word.hpp"

namespace hazret {

// Product measure over a finite alphabet; every symbol has positive mass.
struct IIDModel {
  Eigen::VectorXd probs;
  explicit IIDModel(Eigen::VectorXd p);
};

// Irreducible aperiodic finite chain started from its stationary vector.
struct FiniteMarkovModel {
  Eigen::MatrixXd Q;
  Eigen::VectorXd pi;
  explicit FiniteMarkovModel(Eigen::MatrixXd q);
};

// Continued-fraction digit process under the invariant density 1/(ln2 (1+x)).
// Symbols 0..digit_cap-1 stand for digits 1..digit_cap; symbol digit_cap is
// the overflow class (digit > digit_cap), whose exact mass is
// log2((digit_cap+2)/(digit_cap+1)). Exact measures never truncate: overflow
// cells are evaluated in closed form.
struct GaussDigitModel {
  std::uint32_t digit_cap = 64;
};

using ProcessModel = std::variant<IIDModel, FiniteMarkovModel, GaussDigitModel>;

std::size_t alphabet_size(const ProcessModel& model);

// Unique stationary vector of an irreducible aperiodic row-stochastic matrix.
// Dense solve up to 512 states, power iteration beyond; residual <= 1e-10.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& Q);

// x-interval of the set of points whose capped digit word starts with w.
// Overflow symbols are admitted at the last position only (that set is still
// an interval); width is computed cancellation-free from the convergents.
struct GaussInterval {
  double lo = 0.0, hi = 0.0, width = 0.0;
};
GaussInterval gauss_word_interval(std::uint32_t digit_cap, const Word& w);

// Invariant measure of [lo, hi): log2((1+hi)/(1+lo)), evaluated stably.
double gauss_interval_measure(double lo, double hi);

// Exact measure of the length-n cylinder of w. Gauss words may carry overflow
// symbols at the first and/or last position (closed forms); elsewhere throws.
double cylinder_measure(const ProcessModel& model, const Word& w);

double set_measure(const ProcessModel& model, const CylinderUnion& U);

// Stationary sampler drawing one symbol at a time. IID/Markov consume exactly
// one uniform per symbol through cumulative-weight inversion; Gauss consumes
// one uniform for the stationary start and then iterates the map.
class SymbolStream {
 public:
  SymbolStream(const ProcessModel& model, std::uint64_t seed);

  Symbol next();

  // Fresh stationary stream with a new seed; sampling tables are kept.
  void reseed(std::uint64_t seed);

  // Restart conditioned on a Markov prefix (state = last prefix symbol).
  void condition_on_state(Symbol last);
  // Restart the Gauss point uniformly (per the invariant law) inside [lo, hi).
  void condition_on_interval(double lo, double hi);

 private:
  enum class Kind { Iid, Markov, Gauss } kind_;
  Rng rng_;
  std::vector<double> init_cum_;
  std::vector<std::vector<double>> row_cum_;
  bool started_ = false;
  Symbol state_ = 0;
  double x_ = 0.0;
  std::uint32_t cap_ = 0;
};

std::vector<Symbol> sample_path(const ProcessModel& model, std::size_t length,
                                std::uint64_t seed);

// Uniform mixing coefficient of a finite chain: max over starting states of
// the total variation distance between the n-step row and the stationary law.
double phi_markov_exact(const FiniteMarkovModel& model, int n);

// Certified lower bound: exact sup of |P(future|past) - P(future)| over
// single-cylinder past events of length <= max_event_len anchored at 0 and
// single-cylinder future events anchored at max_event_len-1+n. IID and Markov
// only (those admit exact joint probabilities across a gap).
double phi_cylinder_lower(const ProcessModel& model, int n, int max_event_len,
                          std::size_t budget);

struct DecayReport {
  std::vector<int> depths;
  std::vector<double> max_measure;  // exact for iid/markov, largest-cell for gauss
  double rate = 0.0;                // least-squares slope of -log max_measure vs depth
};
DecayReport cylinder_decay_check(const ProcessModel& model, int depth_lo, int depth_hi);

// {"kind":"iid","probs":[...]} | {"kind":"markov","Q":[[...]]} |
// {"kind":"gauss","digit_cap":N}. Throws invalid_argument with a field path.
ProcessModel model_from_json_text(const std::string& json_text);

}  // namespace hazret
