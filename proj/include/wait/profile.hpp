#ifndef WAIT_PROFILE_HPP
#define WAIT_PROFILE_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "wait/schedules.hpp"

namespace wait {

struct WrongScheduleKind : std::logic_error {
    using std::logic_error::logic_error;
};

struct UndefinedExponent : std::domain_error {
    using std::domain_error::domain_error;
};

// Evaluator for the cumulative weight profile W(x) = sum of w_k over levels
// with b_k <= x (non-strict boundary), its logarithm, the counting function
// N(x), the profile exponent log W(x)/x, and the envelope slack log W(x) - x.
//
// Dyadic-spaced schedules are tabulated: ascending b_k plus log-space prefix
// sums of the weights, answered by binary search.  The unit-weight schedules
// with b_k = log k + o(log k) cannot be tabulated (N(x) grows like e^x), so
// their counts are obtained by inverting the level scale on the log-index
// axis; the count is integer-exact whenever it is representable.
//
// Immutable after construction; concurrent reads are safe.
class ProfileTable {
public:
    ProfileTable(LevelSchedule schedule, double x_max);

    const LevelSchedule& schedule() const { return schedule_; }
    double x_max() const { return x_max_; }

    // true when no level lies at or below x_max, so W == 0 on the whole range
    bool empty() const { return empty_; }

    // number of tabulated levels; zero for the analytically counted kinds
    std::size_t table_size() const { return b_values_.size(); }
    const std::vector<double>& b_values() const { return b_values_; }
    const std::vector<double>& log_prefix() const { return log_prefix_; }

    // log W(x); -inf when no level has fired.  Requires 0 <= x <= x_max.
    double log_W(double x) const;

    // log W(x)/x; throws UndefinedExponent when W(x) == 0 or x <= 0
    double exponent(double x) const;

    // log W(x) - x; at most 0 for any valid schedule (-inf allowed)
    double envelope_slack(double x) const;

    // N(x) = #{k : b_k <= x}; unit-weight schedules only
    std::int64_t counting_N(double x) const;

private:
    bool tabulated() const;
    std::int64_t count_levels(double x) const;  // exact; throws overflow_error if unrepresentable
    double log_count(double x) const;
    double solve_log_index(double x) const;  // u with b_at_log_index(u) = x

    LevelSchedule schedule_;
    double x_max_;
    bool empty_;
    std::vector<double> b_values_;
    std::vector<double> log_prefix_;
};

}  // namespace wait

#endif
