#include "wait/profile.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wait/numeric.hpp"

namespace wait {
namespace {

constexpr double kLog2 = std::numbers::ln2;

// Largest count we resolve integer-exactly; beyond it the floor correction
// to log N is below 2^-60 and the continuous inverse is returned directly.
constexpr double kMaxExactLogCount = 42.0;

}  // namespace

ProfileTable::ProfileTable(LevelSchedule schedule, double x_max)
    : schedule_(std::move(schedule)), x_max_(x_max) {
    if (!(x_max >= 0.0) || !std::isfinite(x_max))
        throw std::invalid_argument("profile: x_max must be finite and nonnegative");
    empty_ = x_max < schedule_.b(schedule_.k_start());
    if (!tabulated() || empty_) return;

    // k_start is 1 for every dyadic-spaced schedule
    const std::int64_t n_levels = count_levels(x_max);
    b_values_.reserve(static_cast<std::size_t>(n_levels));
    log_prefix_.reserve(static_cast<std::size_t>(n_levels));
    double acc = kNegInfinity;
    for (std::int64_t k = 1; k <= n_levels; ++k) {
        b_values_.push_back(schedule_.b(k));
        acc = log_add_exp(acc, schedule_.log_weight(k));
        log_prefix_.push_back(acc);
    }
}

bool ProfileTable::tabulated() const {
    switch (schedule_.kind()) {
        case ScheduleKind::Dyadic:
        case ScheduleKind::WeightedDyadic:
        case ScheduleKind::FractionalWeightedDyadic:
        case ScheduleKind::Custom:
            return true;
        default:
            return false;
    }
}

double ProfileTable::solve_log_index(double x) const {
    const std::int64_t k0 = schedule_.k_start();
    const double u_min = std::log(static_cast<double>(k0));
    const double p = schedule_.shape_param();
    const double y = x + schedule_.log_norm();

    switch (schedule_.kind()) {
        case ScheduleKind::Power:
            return y / (1.0 + p);
        case ScheduleKind::LogCorrected: {
            // u + p log u = y, Newton with a one-step asymptotic start
            double u = std::max(u_min, y - p * std::log(std::max(y, 2.0)));
            for (int it = 0; it < 64; ++it) {
                const double f = u + p * std::log(u) - y;
                const double step = f / (1.0 + p / u);
                u -= step;
                if (u < u_min) u = u_min;
                if (std::abs(step) <= 1e-14 * std::max(1.0, u)) break;
            }
            return u;
        }
        case ScheduleKind::IteratedLog: {
            // u + log u + 2 log log u = y
            double u = std::max(u_min, y - std::log(std::max(y, 3.0)) -
                                           2.0 * std::log(std::log(std::max(y, 3.0))));
            for (int it = 0; it < 64; ++it) {
                const double lu = std::log(u);
                const double f = u + lu + 2.0 * std::log(lu) - y;
                const double step = f / (1.0 + 1.0 / u + 2.0 / (u * lu));
                u -= step;
                if (u < u_min) u = u_min;
                if (std::abs(step) <= 1e-14 * std::max(1.0, u)) break;
            }
            return u;
        }
        default:
            return std::log(std::floor(x / kLog2));
    }
}

std::int64_t ProfileTable::count_levels(double x) const {
    const std::int64_t k0 = schedule_.k_start();
    if (x < schedule_.b(k0)) return 0;

    std::int64_t n;
    if (schedule_.kind() == ScheduleKind::Custom) {
        // largest listed level with b(n) <= x
        std::int64_t lo = k0, hi = k0 + schedule_.custom_size() - 1;
        while (lo < hi) {
            const std::int64_t mid = lo + (hi - lo + 1) / 2;
            if (schedule_.b(mid) <= x)
                lo = mid;
            else
                hi = mid - 1;
        }
        n = lo;
    } else if (tabulated()) {
        n = static_cast<std::int64_t>(std::floor(x / kLog2));
    } else {
        const double u = solve_log_index(x);
        if (u > kMaxExactLogCount)
            throw std::overflow_error("level count at x = " + std::to_string(x) +
                                      " is too large to resolve exactly; use log W instead");
        n = static_cast<std::int64_t>(std::floor(std::exp(u)));
    }
    // settle ties on the exact integer scale (b_k <= x is non-strict)
    while (schedule_.b(n + 1) <= x) ++n;
    while (n >= k0 && schedule_.b(n) > x) --n;
    if (n < k0) return 0;
    return n - k0 + 1;
}

double ProfileTable::log_count(double x) const {
    const std::int64_t k0 = schedule_.k_start();
    if (x < schedule_.b(k0)) return kNegInfinity;
    const double u = solve_log_index(x);
    if (u > kMaxExactLogCount) {
        // floor and k_start corrections are below 2^-60 here
        return u;
    }
    return std::log(static_cast<double>(count_levels(x)));
}

double ProfileTable::log_W(double x) const {
    if (!(x >= 0.0))
        throw std::out_of_range("profile: x must be nonnegative");
    if (x > x_max_)
        throw std::out_of_range("profile: x exceeds the tabulated range x_max");
    if (empty_) return kNegInfinity;
    if (tabulated()) {
        const auto it = std::upper_bound(b_values_.begin(), b_values_.end(), x);
        const std::size_t idx = static_cast<std::size_t>(it - b_values_.begin());
        return idx == 0 ? kNegInfinity : log_prefix_[idx - 1];
    }
    return log_count(x);
}

double ProfileTable::exponent(double x) const {
    const double lw = log_W(x);
    if (lw == kNegInfinity)
        throw UndefinedExponent("profile exponent undefined: W(x) = 0 at x = " + std::to_string(x));
    if (!(x > 0.0)) throw UndefinedExponent("profile exponent undefined at x = 0");
    return lw / x;
}

double ProfileTable::envelope_slack(double x) const { return log_W(x) - x; }

std::int64_t ProfileTable::counting_N(double x) const {
    if (!schedule_.unit_weights())
        throw WrongScheduleKind("counting function requires a unit-weight schedule; got " +
                                schedule_.key());
    if (!(x >= 0.0) || x > x_max_)
        throw std::out_of_range("profile: x outside [0, x_max]");
    return count_levels(x);
}

}  // namespace wait
