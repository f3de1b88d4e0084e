#ifndef WAIT_GAUSSIAN_HPP
#define WAIT_GAUSSIAN_HPP

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "wait/numeric.hpp"

namespace wait {

// Sentinel for a passage that never happens within the horizon.
inline constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();

enum class Hypothesis { Null, Alternative };

// i.i.d. Gaussian observations: N(0,1) under the null, N(mu,1) under the
// alternative.  The score is the log-likelihood ratio, with increments
// mu*X_i - mu^2/2.
struct GaussianBed {
    double mu = 1.0;
    Hypothesis hypothesis = Hypothesis::Null;
};

// KL(Q||P) = mu^2/2
double kl_rate(double mu);

// Running maxima H_t of simulated score paths, recorded at the grid times
// only; the maximum itself is maintained at every step in between so that
// crossings cannot be missed.
struct RunningMaxBatch {
    std::vector<std::int64_t> grid;    // ascending, starts at 0
    Matrix<double> running_max;        // [path x grid point]
    std::uint64_t seed = 0;

    std::size_t n_paths() const { return running_max.rows(); }
};

RunningMaxBatch simulate_running_max(const GaussianBed& bed, std::int64_t n_paths,
                                     std::int64_t horizon, std::span<const std::int64_t> grid,
                                     std::uint64_t seed);

// First index with running_max >= threshold (non-strict), kNever if none.
// Thresholds must be ascending; the result is nested by construction.
std::vector<std::int64_t> first_passage_indices(std::span<const double> running_max,
                                                std::span<const double> thresholds);

// Grid-observed passage times for a simulated batch: entry (i, j) is the
// first grid time at which path i satisfies H >= thresholds[j].
Matrix<std::int64_t> first_passage_times(const RunningMaxBatch& batch,
                                         std::span<const double> thresholds);

// Step-exact passage times tau_b = inf{t >= 0 : S_t >= b}, simulated at full
// resolution (no grid involved).
Matrix<std::int64_t> simulate_first_passage(const GaussianBed& bed, std::int64_t n_paths,
                                            std::int64_t horizon,
                                            std::span<const double> thresholds,
                                            std::uint64_t seed);

}  // namespace wait

#endif
