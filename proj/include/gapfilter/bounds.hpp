#pragma once

#include <cstddef>
#include <cstdint>

namespace gapfilter::bounds {

/// Probability that M flows hashed uniformly into d buckets land in M
/// distinct buckets: prod_{j=1}^{M-1} (1 - j/d). Zero when M > d.
double pdiff_exact(std::uint64_t m, std::uint64_t d);

/// Closed-form lower bound (1 - M/d)^(M-d) * e^-M. Requires 1 <= M < d;
/// throws std::invalid_argument otherwise.
double pdiff_lower_bound(std::uint64_t m, std::uint64_t d);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

/// Fraction of `trials` in which M uniform throws into d buckets are all
/// distinct, with its binomial standard error.
MonteCarloEstimate pdiff_montecarlo(std::uint64_t m, std::uint64_t d, std::uint64_t trials,
                                    std::uint64_t seed);

/// 1 - 2^a (a-1)^(1/a - 1) M^(-(a-1)^2 / a), unclamped. Negative at small M.
double recall_lower_bound_raw(double alpha, double m);

/// recall_lower_bound_raw clamped to [0, 1]. Throws for alpha <= 1 or M < 1.
double recall_lower_bound(double alpha, double m);

/// Upper bound on not-reported instances of one flow of size L holding
/// share p of its bucket's items: beta * L * (1 - p)^w.
double nri_bound(double flow_size, double share, std::size_t w, double beta);

}  // namespace gapfilter::bounds
