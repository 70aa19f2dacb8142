#include "hazret/pmf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hazret {

void validate_pmf(const Pmf& p) {
  if (!(p.tail >= 0.0)) throw std::invalid_argument("pmf: negative tail");
  double sum = p.tail;
  for (double v : p.probs) {
    if (!(v >= 0.0)) throw std::invalid_argument("pmf: negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("pmf: total mass not 1");
}

Pmf geo_pmf(double rho, std::size_t K) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("geo_pmf: rho outside (0,1)");
  Pmf out;
  out.probs.resize(K + 1);
  double w = 1.0;  // (1-rho)^k
  for (std::size_t k = 0; k <= K; ++k) {
    out.probs[k] = rho * w;
    w *= 1.0 - rho;
  }
  out.tail = w;
  return out;
}

TvInterval tv_distance(const Pmf& p, const Pmf& q) {
  validate_pmf(p);
  validate_pmf(q);
  const std::size_t K = std::max(p.probs.size(), q.probs.size());
  double s = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double a = k < p.probs.size() ? p.probs[k] : 0.0;
    const double b = k < q.probs.size() ? q.probs[k] : 0.0;
    s += std::abs(a - b);
  }
  TvInterval out;
  out.lower = 0.5 * (s + std::abs(p.tail - q.tail));
  out.upper = 0.5 * s + std::max(p.tail, q.tail);
  return out;
}

}  // namespace hazret
