#ifndef WAIT_AGGREGATE_HPP
#define WAIT_AGGREGATE_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wait/gaussian.hpp"
#include "wait/montecarlo.hpp"
#include "wait/numeric.hpp"
#include "wait/profile.hpp"

namespace wait {

struct ProfileRangeExceeded : std::runtime_error {
    ProfileRangeExceeded(double observed, double limit)
        : std::runtime_error("running maximum " + std::to_string(observed) +
                             " exceeds the profile range " + std::to_string(limit)),
          observed_max(observed),
          x_max(limit) {}
    double observed_max;
    double x_max;
};

// Per-path, per-grid-time log values of the aggregate M_t = W(H_t).  M
// starts at zero, so log M is -inf until the first level fires; the eta mix
// is applied on readout, never stored.
struct AggregateTrajectory {
    std::vector<std::int64_t> grid;
    Matrix<double> log_m;
    double eta = 1e-12;

    std::size_t n_paths() const { return log_m.rows(); }
};

// log(eta + (1 - eta) e^log_m), evaluated as a log-space mix
double eta_correct(double log_m, double eta);

// Fast path for nested first-passage tests: M_t = W(H_t) evaluated on the
// recorded grid.  Throws ProfileRangeExceeded when any H value lies beyond
// the profile's range (callers rebuild the profile and retry).
AggregateTrajectory aggregate_from_running_max(const ProfileTable& profile,
                                               const RunningMaxBatch& batch, double eta = 1e-12);

// Independent oracle: the direct indicator sum over levels k_start..k_max
// given their stopping times, accumulated in log space.  tau_by_level[i]
// belongs to level k_start + i and must be nondecreasing (nested tests).
double aggregate_brute_force(const LevelSchedule& schedule,
                             std::span<const std::int64_t> tau_by_level, std::int64_t t,
                             std::int64_t k_max);

// Mean and standard error of the eta-corrected log M_t / t across paths;
// t must be a positive grid time.
Estimate epower(const AggregateTrajectory& traj, std::int64_t t);

// First grid time with M_t >= 1/alpha (non-strict), kNever if none.
std::int64_t threshold_time(const AggregateTrajectory& traj, std::size_t path, double alpha);

}  // namespace wait

#endif
