#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace hazret {

// Parameter of the geometric law of the number of Bernoulli(q) marks seen
// strictly before the first Bernoulli(p) mark when both streams run in
// lockstep and a simultaneous mark counts as a hazard hit: p/(p+q-pq).
double bernoulli_pair_parameter(double p, double q);

// Probability that a rate-lambda exponential clock rings before an
// independent rate-nu clock: lambda/(lambda+nu).
double competing_rates_parameter(double lambda, double nu);

// Inputs of the finite-size total variation bound for the law of the
// number of returns to U before the first visit to V.
struct BoundInputs {
  double pU = 0.0;
  double pV = 0.0;
  double pUr = 0.0;  // measure of U shifted left by r, at least pU
  double pVr = 0.0;
  std::size_t n = 1;  // U word length
  std::size_t m = 1;  // V word length
  std::uint64_t M = 1;
  std::uint64_t R = 1;
  std::size_t r = 0;  // shift offset, r < min(n,m)
  std::int64_t kappa = 0;
  // Mixing coefficients; evaluated only at positive arguments, values must
  // lie in [0,1]. Non-positive arguments are clamped to the trivial bound 1.
  std::function<double(std::int64_t)> phi;
};

// The published constants of the bound and the sharper set appearing in its
// final assembly differ; both are exposed and reports carry both.
enum class BoundForm { Statement, ProofFinal };

double sigma_tv_bound(const BoundInputs& in, BoundForm form);

struct BoundOptimum {
  std::uint64_t M = 0;
  std::uint64_t R = 0;
  std::size_t r = 0;
  double value = 0.0;
};

// Grid argmin of sigma_tv_bound; pUr_of/pVr_of supply the shifted-set
// measures per candidate r. Ties break toward the smallest (M, R, r).
BoundOptimum minimize_sigma_tv_bound(
    double pU, double pV,
    const std::function<double(std::size_t)>& pUr_of,
    const std::function<double(std::size_t)>& pVr_of,
    std::size_t n, std::size_t m, std::int64_t kappa,
    const std::function<double(std::int64_t)>& phi,
    const std::vector<std::uint64_t>& M_grid,
    const std::vector<std::uint64_t>& R_grid,
    const std::vector<std::size_t>& r_grid,
    BoundForm form);

}  // namespace hazret
