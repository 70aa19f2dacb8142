#include "hazret/geolaw.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

namespace hazret {

double bernoulli_pair_parameter(double p, double q) {
  if (!(p > 0.0 && p < 1.0) || !(q > 0.0 && q < 1.0))
    throw std::invalid_argument("bernoulli_pair_parameter: p, q must lie in (0,1)");
  return p / (p + q - p * q);
}

double competing_rates_parameter(double lambda, double nu) {
  if (!(lambda > 0.0) || !(nu > 0.0))
    throw std::invalid_argument("competing_rates_parameter: rates must be positive");
  return lambda / (lambda + nu);
}

namespace {

double phi_clamped(const BoundInputs& in, std::int64_t k) {
  if (k <= 0) return 1.0;
  if (!in.phi) throw std::invalid_argument("sigma_tv_bound: phi not set");
  const double v = in.phi(k);
  if (!(v >= 0.0 && v <= 1.0))
    throw std::invalid_argument("sigma_tv_bound: phi value outside [0,1]");
  return v;
}

void check_inputs(const BoundInputs& in) {
  if (!(in.pU > 0.0 && in.pU < 1.0))
    throw std::invalid_argument("sigma_tv_bound: pU outside (0,1)");
  if (!(in.pV > 0.0 && in.pV < 1.0))
    throw std::invalid_argument("sigma_tv_bound: pV outside (0,1)");
  if (in.pUr < in.pU) throw std::invalid_argument("sigma_tv_bound: pUr below pU");
  if (in.pVr < in.pV) throw std::invalid_argument("sigma_tv_bound: pVr below pV");
  if (in.n == 0 || in.m == 0) throw std::invalid_argument("sigma_tv_bound: zero word length");
  if (in.M == 0 || in.R == 0)
    throw std::invalid_argument("sigma_tv_bound: M and R must be positive");
  if (in.r >= std::min(in.n, in.m))
    throw std::invalid_argument("sigma_tv_bound: r must be below min(n,m)");
}

}  // namespace

double sigma_tv_bound(const BoundInputs& in, BoundForm form) {
  check_inputs(in);
  const double pS = in.pU + in.pV;
  const double M = static_cast<double>(in.M);
  const double MR = M * static_cast<double>(in.R);
  const auto L = static_cast<std::int64_t>(std::max(in.n, in.m));
  const auto R = static_cast<std::int64_t>(in.R);
  const double survive = std::pow(1.0 - in.pV, static_cast<double>(in.M) + 1.0);
  if (form == BoundForm::Statement) {
    const double lag = phi_clamped(in, in.kappa + static_cast<std::int64_t>(in.r) - L);
    return 2.0 * (survive + in.pU + 6.0 * MR * pS * pS + 6.0 * M * phi_clamped(in, R - L) +
                  8.0 * MR * pS * (in.pUr + in.pVr + lag));
  }
  const std::int64_t gap =
      in.kappa - std::abs(static_cast<std::int64_t>(in.n) - static_cast<std::int64_t>(in.m));
  return 2.0 * survive + 2.0 * in.pU + 8.0 * MR * pS * pS +
         16.0 * MR * pS * phi_clamped(in, gap) + 12.0 * M * phi_clamped(in, R - L) +
         4.0 * M * (in.pU * in.pU + in.pV * in.pV);
}

BoundOptimum minimize_sigma_tv_bound(
    double pU, double pV,
    const std::function<double(std::size_t)>& pUr_of,
    const std::function<double(std::size_t)>& pVr_of,
    std::size_t n, std::size_t m, std::int64_t kappa,
    const std::function<double(std::int64_t)>& phi,
    const std::vector<std::uint64_t>& M_grid,
    const std::vector<std::uint64_t>& R_grid,
    const std::vector<std::size_t>& r_grid,
    BoundForm form) {
  if (M_grid.empty() || R_grid.empty() || r_grid.empty())
    throw std::invalid_argument("minimize_sigma_tv_bound: empty grid");
  BoundOptimum best;
  bool have = false;
  for (std::uint64_t M : M_grid)
    for (std::uint64_t R : R_grid)
      for (std::size_t r : r_grid) {
        BoundInputs in;
        in.pU = pU;
        in.pV = pV;
        in.pUr = pUr_of(r);
        in.pVr = pVr_of(r);
        in.n = n;
        in.m = m;
        in.M = M;
        in.R = R;
        in.r = r;
        in.kappa = kappa;
        in.phi = phi;
        const double v = sigma_tv_bound(in, form);
        const bool tie_smaller =
            have && v == best.value && std::tuple(M, R, r) < std::tuple(best.M, best.R, best.r);
        if (!have || v < best.value || tie_smaller) {
          best = BoundOptimum{M, R, r, v};
          have = true;
        }
      }
  return best;
}

}  // namespace hazret
