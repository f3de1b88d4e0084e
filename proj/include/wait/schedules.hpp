#ifndef WAIT_SCHEDULES_HPP
#define WAIT_SCHEDULES_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wait {

enum class ScheduleKind {
    Dyadic,
    Power,
    LogCorrected,
    IteratedLog,
    WeightedDyadic,
    FractionalWeightedDyadic,
    Custom,
};

struct Level {
    double alpha;
    double b;           // -log(alpha)
    double log_weight;  // weights are carried in log space
};

// A level/weight family (alpha_k, b_k, w_k), normalized so that the capital
// budget sum_k w_k * alpha_k never exceeds one.  Immutable after
// construction; safe to share across threads.
class LevelSchedule {
public:
    // alpha_k = 2^-k, w_k = 1
    static LevelSchedule dyadic();
    // alpha_k = k^-(1+eps) / zeta(1+eps), w_k = 1
    static LevelSchedule power(double epsilon);
    // alpha_k = c / [k (log k)^p] for k >= k_start, w_k = 1
    static LevelSchedule log_corrected(double p = 2.0, std::int64_t k_start = 10);
    // alpha_k = c / [k log k (log log k)^2] for k >= k_start, w_k = 1
    static LevelSchedule iterated_log(std::int64_t k_start = 16);
    // alpha_k = 2^-k, w_k = (6/pi^2) 2^k / k^2
    static LevelSchedule weighted_dyadic();
    // alpha_k = 2^-k, w_k = c 2^(rho k) / k^2 with c fixed by the budget equality
    static LevelSchedule fractional_weighted_dyadic(double rho);

    // Explicit finite family from level and weight lists (weights default to
    // one when empty).  Levels must be strictly decreasing in (0,1), weights
    // positive, and the budget sum w_k alpha_k at most one; a finite family
    // has profile exponent zero.
    static LevelSchedule custom(std::vector<double> alphas, std::vector<double> weights = {});

    // String keys: dyadic, power:<eps>, logcorr:<p>:<k0>, itlog:<k0>,
    // wdyadic, fwdyadic:<rho>
    static LevelSchedule parse(std::string_view key);

    // The seven default schemes, in the canonical comparison order.
    static std::vector<LevelSchedule> table_schedules();

    ScheduleKind kind() const { return kind_; }
    std::int64_t k_start() const { return k_start_; }
    double norm_constant() const { return norm_; }
    double log_norm() const { return log_norm_; }
    double target_rho() const { return target_rho_; }
    // epsilon, p, or rho depending on the kind; zero where unused
    double shape_param() const { return param_; }
    bool unit_weights() const;

    std::string key() const;
    std::string definition() const;

    // number of levels for the explicit finite family, 0 otherwise
    std::int64_t custom_size() const;

    // log(1/alpha_k); +inf past the end of a finite family
    double b(std::int64_t k) const;
    double alpha(std::int64_t k) const;        // exp(-b(k)); underflows for huge k
    double log_weight(std::int64_t k) const;
    Level level(std::int64_t k) const;         // throws std::out_of_range below k_start

    // b on the continuous index scale, parameterized by log(k) so that the
    // profile can invert it far beyond integer range.
    double b_at_log_index(double log_k) const;

    // w_k * alpha_k evaluated without the log-space cancellation
    double budget_term(std::int64_t k) const;
    // sum of budget terms for k_start <= k <= k_max, compensated
    double partial_budget(std::int64_t k_max) const;

private:
    struct CustomLevels {
        std::vector<double> b;
        std::vector<double> log_weight;
        std::vector<double> budget_term;
    };

    LevelSchedule(ScheduleKind kind, double param, std::int64_t k_start, double norm,
                  double target_rho);

    ScheduleKind kind_;
    double param_;
    std::int64_t k_start_;
    double norm_;
    double log_norm_;
    double target_rho_;
    std::shared_ptr<const CustomLevels> custom_;
};

// Riemann zeta at s_exp > 1 by direct summation with an integral tail
// bracket; the result is within tol of the true value.
double zeta_sum_with_tail(double s_exp, double tol);

}  // namespace wait

#endif
