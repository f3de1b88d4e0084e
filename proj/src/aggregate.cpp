#include "wait/aggregate.hpp"

#include <algorithm>
#include <cmath>

namespace wait {

double eta_correct(double log_m, double eta) {
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in (0,1)");
    return log_add_exp(std::log(eta), std::log1p(-eta) + log_m);
}

AggregateTrajectory aggregate_from_running_max(const ProfileTable& profile,
                                               const RunningMaxBatch& batch, double eta) {
    if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("eta must lie in (0,1)");
    double observed_max = 0.0;
    for (std::size_t i = 0; i < batch.n_paths(); ++i)
        for (double h : batch.running_max.row(i)) observed_max = std::max(observed_max, h);
    if (observed_max > profile.x_max()) throw ProfileRangeExceeded(observed_max, profile.x_max());

    AggregateTrajectory traj;
    traj.grid = batch.grid;
    traj.eta = eta;
    traj.log_m = Matrix<double>(batch.n_paths(), batch.grid.size());
    for (std::size_t i = 0; i < batch.n_paths(); ++i) {
        const auto h = batch.running_max.row(i);
        auto out = traj.log_m.row(i);
        for (std::size_t j = 0; j < h.size(); ++j) out[j] = profile.log_W(h[j]);
    }
    return traj;
}

double aggregate_brute_force(const LevelSchedule& schedule,
                             std::span<const std::int64_t> tau_by_level, std::int64_t t,
                             std::int64_t k_max) {
    const std::int64_t k_start = schedule.k_start();
    if (k_max < k_start) throw std::invalid_argument("aggregate oracle: k_max below k_start");
    if (static_cast<std::int64_t>(tau_by_level.size()) != k_max - k_start + 1)
        throw std::invalid_argument("aggregate oracle: stopping-time list does not match k_max");
    for (std::size_t i = 1; i < tau_by_level.size(); ++i)
        if (tau_by_level[i] < tau_by_level[i - 1])
            throw std::invalid_argument("aggregate oracle: stopping times must be nested");
    if (!tau_by_level.empty() && tau_by_level.back() <= t && tau_by_level.back() != kNever &&
        std::isfinite(schedule.b(k_max + 1)))
        throw std::invalid_argument("aggregate oracle: k_max does not cover all finite stopping times <= t");

    double acc = kNegInfinity;
    for (std::size_t i = 0; i < tau_by_level.size(); ++i) {
        if (tau_by_level[i] > t) break;  // nested: later levels cannot have fired either
        acc = log_add_exp(acc, schedule.log_weight(k_start + static_cast<std::int64_t>(i)));
    }
    return acc;
}

Estimate epower(const AggregateTrajectory& traj, std::int64_t t) {
    if (t <= 0) throw std::invalid_argument("epower undefined at t <= 0");
    const auto it = std::lower_bound(traj.grid.begin(), traj.grid.end(), t);
    if (it == traj.grid.end() || *it != t)
        throw std::invalid_argument("epower: t is not a grid time");
    const std::size_t col = static_cast<std::size_t>(it - traj.grid.begin());
    std::vector<double> rates(traj.n_paths());
    for (std::size_t i = 0; i < traj.n_paths(); ++i)
        rates[i] = eta_correct(traj.log_m(i, col), traj.eta) / static_cast<double>(t);
    return mean_with_se(rates);
}

std::int64_t threshold_time(const AggregateTrajectory& traj, std::size_t path, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("threshold_time: alpha must lie in (0,1)");
    if (path >= traj.n_paths()) throw std::out_of_range("threshold_time: path index");
    const double b = -std::log(alpha);
    const auto row = traj.log_m.row(path);
    for (std::size_t j = 0; j < row.size(); ++j)
        if (row[j] >= b) return traj.grid[j];
    return kNever;
}

}  // namespace wait
