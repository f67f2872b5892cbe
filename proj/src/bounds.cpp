#include "gapfilter/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace gapfilter::bounds {

double pdiff_exact(std::uint64_t m, std::uint64_t d) {
  if (m < 1 || d < 1) throw std::invalid_argument("pdiff needs M >= 1 and d >= 1");
  if (m > d) return 0.0;
  const double dd = static_cast<double>(d);
  double log_p = 0.0;
  for (std::uint64_t j = 1; j < m; ++j) log_p += std::log1p(-static_cast<double>(j) / dd);
  return std::exp(log_p);
}

double pdiff_lower_bound(std::uint64_t m, std::uint64_t d) {
  if (m < 1 || m >= d) throw std::invalid_argument("pdiff lower bound needs 1 <= M < d");
  const double mm = static_cast<double>(m);
  const double dd = static_cast<double>(d);
  return std::exp((mm - dd) * std::log1p(-mm / dd) - mm);
}

MonteCarloEstimate pdiff_montecarlo(std::uint64_t m, std::uint64_t d, std::uint64_t trials,
                                    std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("Monte Carlo needs at least one trial");
  if (d < 1) throw std::invalid_argument("pdiff needs d >= 1");
  if (m > d) return {0.0, 0.0};

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> bucket(0, d - 1);
  // Stamp of the last trial that hit each bucket.
  std::vector<std::uint64_t> stamp(d, 0);
  std::uint64_t distinct = 0;
  for (std::uint64_t t = 1; t <= trials; ++t) {
    bool ok = true;
    for (std::uint64_t i = 0; i < m; ++i) {
      std::uint64_t& s = stamp[bucket(rng)];
      if (s == t) {
        ok = false;
        break;
      }
      s = t;
    }
    if (ok) ++distinct;
  }
  const double p = static_cast<double>(distinct) / static_cast<double>(trials);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials))};
}

double recall_lower_bound_raw(double alpha, double m) {
  if (!(alpha > 1.0)) throw std::invalid_argument("recall bound needs alpha > 1");
  if (!(m >= 1.0)) throw std::invalid_argument("recall bound needs M >= 1");
  const double a1 = alpha - 1.0;
  const double log_term = alpha * std::log(2.0) + (1.0 / alpha - 1.0) * std::log(a1) -
                          (a1 * a1 / alpha) * std::log(m);
  return 1.0 - std::exp(log_term);
}

double recall_lower_bound(double alpha, double m) {
  return std::clamp(recall_lower_bound_raw(alpha, m), 0.0, 1.0);
}

double nri_bound(double flow_size, double share, std::size_t w, double beta) {
  if (!(share > 0.0 && share <= 1.0)) throw std::invalid_argument("flow share must lie in (0, 1]");
  return beta * flow_size * std::pow(1.0 - share, static_cast<double>(w));
}

}  // namespace gapfilter::bounds
