#include "wait/schedules.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include "wait/numeric.hpp"

namespace wait {
namespace {

constexpr double kLog2 = std::numbers::ln2;

// Truncation point for the normalization sums of the log-corrected and
// iterated-log schedules; beyond it the analytic integral upper bound takes
// over, so the realized budget stays strictly below one.
constexpr std::int64_t kNormTruncation = 10'000'000;

// zeta bracket: sum k^-s for k < K, then K^(1-s)/(s-1) <= tail <= (K-1)^(1-s)/(s-1).
std::pair<double, double> zeta_bracket(double s_exp, double tol) {
    KahanSum partial;
    std::int64_t k = 1;
    for (std::int64_t cap = 64;; cap *= 2) {
        for (; k < cap; ++k) partial.add(std::pow(static_cast<double>(k), -s_exp));
        const double upper_k = static_cast<double>(cap);
        const double lo = std::pow(upper_k, 1.0 - s_exp) / (s_exp - 1.0);
        const double hi = std::pow(upper_k - 1.0, 1.0 - s_exp) / (s_exp - 1.0);
        if (hi - lo <= tol) return {partial.value() + lo, partial.value() + hi};
    }
}

double log_corrected_inverse_norm(double p, std::int64_t k0) {
    KahanSum s;
    for (std::int64_t k = k0; k <= kNormTruncation; ++k) {
        const double lk = std::log(static_cast<double>(k));
        s.add(1.0 / (static_cast<double>(k) * std::pow(lk, p)));
    }
    const double tail = std::pow(std::log(static_cast<double>(kNormTruncation)), 1.0 - p) / (p - 1.0);
    return s.value() + tail;
}

double iterated_log_inverse_norm(std::int64_t k0) {
    KahanSum s;
    for (std::int64_t k = k0; k <= kNormTruncation; ++k) {
        const double lk = std::log(static_cast<double>(k));
        const double llk = std::log(lk);
        s.add(1.0 / (static_cast<double>(k) * lk * llk * llk));
    }
    const double tail = 1.0 / std::log(std::log(static_cast<double>(kNormTruncation)));
    return s.value() + tail;
}

double fractional_dyadic_inverse_norm(double rho) {
    // sum_k 2^(-(1-rho)k)/k^2; the term ratio is below 2^(rho-1) < 1
    KahanSum s;
    for (std::int64_t k = 1;; ++k) {
        const double kd = static_cast<double>(k);
        const double term = std::exp2(-(1.0 - rho) * kd) / (kd * kd);
        s.add(term);
        if (k >= 64 && term < 1e-18 * s.value()) break;
    }
    return s.value();
}

// Normalization constants are expensive (sums to 10^7 terms); memoize per process.
double cached_norm(ScheduleKind kind, double param, std::int64_t k0, double (*compute)(double, std::int64_t)) {
    static std::mutex mutex;
    static std::map<std::tuple<int, double, std::int64_t>, double> cache;
    std::lock_guard<std::mutex> lock(mutex);
    const auto key = std::make_tuple(static_cast<int>(kind), param, k0);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, compute(param, k0)).first;
    return it->second;
}

std::string format_param(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

double zeta_sum_with_tail(double s_exp, double tol) {
    if (!(s_exp > 1.0)) throw std::invalid_argument("zeta_sum_with_tail: exponent must exceed 1");
    if (!(tol > 0.0)) throw std::invalid_argument("zeta_sum_with_tail: tolerance must be positive");
    const auto [lo, hi] = zeta_bracket(s_exp, tol);
    return 0.5 * (lo + hi);
}

LevelSchedule::LevelSchedule(ScheduleKind kind, double param, std::int64_t k_start, double norm,
                             double target_rho)
    : kind_(kind),
      param_(param),
      k_start_(k_start),
      norm_(norm),
      log_norm_(std::log(norm)),
      target_rho_(target_rho) {}

LevelSchedule LevelSchedule::dyadic() {
    return LevelSchedule(ScheduleKind::Dyadic, 0.0, 1, 1.0, 0.0);
}

LevelSchedule LevelSchedule::power(double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("power schedule: epsilon must be positive");
    // Upper end of the zeta bracket, so that sum alpha_k <= 1 holds exactly.
    const double inv_norm = cached_norm(ScheduleKind::Power, epsilon, 0, [](double eps, std::int64_t) {
        return zeta_bracket(1.0 + eps, 1e-8).second;
    });
    return LevelSchedule(ScheduleKind::Power, epsilon, 1, 1.0 / inv_norm, 1.0 / (1.0 + epsilon));
}

LevelSchedule LevelSchedule::log_corrected(double p, std::int64_t k_start) {
    if (!(p > 1.0)) throw std::invalid_argument("log-corrected schedule: p must exceed 1 (series diverges)");
    if (k_start < 3) throw std::invalid_argument("log-corrected schedule: k_start must be at least 3");
    const double inv_norm = cached_norm(ScheduleKind::LogCorrected, p, k_start, log_corrected_inverse_norm);
    return LevelSchedule(ScheduleKind::LogCorrected, p, k_start, 1.0 / inv_norm, 1.0);
}

LevelSchedule LevelSchedule::iterated_log(std::int64_t k_start) {
    if (k_start < 16) throw std::invalid_argument("iterated-log schedule: k_start must be at least 16");
    const double inv_norm = cached_norm(ScheduleKind::IteratedLog, 0.0, k_start, [](double, std::int64_t k0) {
        return iterated_log_inverse_norm(k0);
    });
    return LevelSchedule(ScheduleKind::IteratedLog, 0.0, k_start, 1.0 / inv_norm, 1.0);
}

LevelSchedule LevelSchedule::weighted_dyadic() {
    const double norm = 6.0 / (std::numbers::pi * std::numbers::pi);
    return LevelSchedule(ScheduleKind::WeightedDyadic, 0.0, 1, norm, 1.0);
}

LevelSchedule LevelSchedule::fractional_weighted_dyadic(double rho) {
    if (!(rho > 0.0 && rho < 1.0))
        throw std::invalid_argument("fractional weighted dyadic: rho must lie in (0,1)");
    const double inv_norm =
        cached_norm(ScheduleKind::FractionalWeightedDyadic, rho, 0, [](double r, std::int64_t) {
            return fractional_dyadic_inverse_norm(r);
        });
    // Shaded by 1e-12 so finite budgets stay strictly <= 1 under rounding.
    return LevelSchedule(ScheduleKind::FractionalWeightedDyadic, rho, 1, (1.0 - 1e-12) / inv_norm, rho);
}

LevelSchedule LevelSchedule::custom(std::vector<double> alphas, std::vector<double> weights) {
    if (alphas.empty()) throw std::invalid_argument("custom schedule: need at least one level");
    if (weights.empty()) weights.assign(alphas.size(), 1.0);
    if (weights.size() != alphas.size())
        throw std::invalid_argument("custom schedule: level and weight lists differ in length");

    auto levels = std::make_shared<CustomLevels>();
    levels->b.reserve(alphas.size());
    levels->log_weight.reserve(alphas.size());
    levels->budget_term.reserve(alphas.size());
    KahanSum budget;
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0 && alphas[i] < 1.0))
            throw std::invalid_argument("custom schedule: levels must lie in (0,1)");
        if (i > 0 && !(alphas[i] < alphas[i - 1]))
            throw std::invalid_argument("custom schedule: levels must be strictly decreasing");
        if (!(weights[i] > 0.0))
            throw std::invalid_argument("custom schedule: weights must be positive");
        levels->b.push_back(-std::log(alphas[i]));
        levels->log_weight.push_back(std::log(weights[i]));
        levels->budget_term.push_back(weights[i] * alphas[i]);
        budget.add(weights[i] * alphas[i]);
    }
    if (budget.value() > 1.0 + 1e-12)
        throw std::invalid_argument("custom schedule: budget sum w_k alpha_k exceeds one (" +
                                    std::to_string(budget.value()) + ")");

    // a finite family has W eventually constant, so its exponent is zero
    LevelSchedule s(ScheduleKind::Custom, 0.0, 1, 1.0, 0.0);
    s.custom_ = std::move(levels);
    return s;
}

LevelSchedule LevelSchedule::parse(std::string_view key) {
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= key.size()) {
        const std::size_t next = key.find(':', pos);
        if (next == std::string_view::npos) {
            parts.emplace_back(key.substr(pos));
            break;
        }
        parts.emplace_back(key.substr(pos, next - pos));
        pos = next + 1;
    }
    auto as_double = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad schedule parameter '" + s + "' in key '" + std::string(key) + "'");
        }
        if (used != s.size())
            throw std::invalid_argument("bad schedule parameter '" + s + "' in key '" + std::string(key) + "'");
        return v;
    };
    auto as_int = [&](const std::string& s) {
        const double v = as_double(s);
        const auto i = static_cast<std::int64_t>(v);
        if (static_cast<double>(i) != v)
            throw std::invalid_argument("schedule parameter '" + s + "' must be an integer");
        return i;
    };

    const std::string& name = parts[0];
    const std::size_t extra = parts.size() - 1;
    if (name == "dyadic" && extra == 0) return dyadic();
    if (name == "wdyadic" && extra == 0) return weighted_dyadic();
    if (name == "power" && extra == 1) return power(as_double(parts[1]));
    if (name == "logcorr" && extra == 2) return log_corrected(as_double(parts[1]), as_int(parts[2]));
    if (name == "itlog" && extra == 1) return iterated_log(as_int(parts[1]));
    if (name == "fwdyadic" && extra == 1) return fractional_weighted_dyadic(as_double(parts[1]));
    throw std::invalid_argument("unknown schedule key '" + std::string(key) + "'");
}

std::vector<LevelSchedule> LevelSchedule::table_schedules() {
    return {dyadic(),       power(0.5),     power(0.1),
            log_corrected(), iterated_log(), weighted_dyadic(),
            fractional_weighted_dyadic(0.5)};
}

bool LevelSchedule::unit_weights() const {
    switch (kind_) {
        case ScheduleKind::Dyadic:
        case ScheduleKind::Power:
        case ScheduleKind::LogCorrected:
        case ScheduleKind::IteratedLog:
            return true;
        case ScheduleKind::WeightedDyadic:
        case ScheduleKind::FractionalWeightedDyadic:
            return false;
        case ScheduleKind::Custom:
            for (double lw : custom_->log_weight)
                if (lw != 0.0) return false;
            return true;
    }
    return false;
}

std::int64_t LevelSchedule::custom_size() const {
    return custom_ ? static_cast<std::int64_t>(custom_->b.size()) : 0;
}

std::string LevelSchedule::key() const {
    switch (kind_) {
        case ScheduleKind::Dyadic:
            return "dyadic";
        case ScheduleKind::Power:
            return "power:" + format_param(param_);
        case ScheduleKind::LogCorrected:
            return "logcorr:" + format_param(param_) + ":" + std::to_string(k_start_);
        case ScheduleKind::IteratedLog:
            return "itlog:" + std::to_string(k_start_);
        case ScheduleKind::WeightedDyadic:
            return "wdyadic";
        case ScheduleKind::FractionalWeightedDyadic:
            return "fwdyadic:" + format_param(param_);
        case ScheduleKind::Custom:
            return "custom";
    }
    return "?";
}

std::string LevelSchedule::definition() const {
    switch (kind_) {
        case ScheduleKind::Dyadic:
            return "alpha_k = 2^-k, w_k = 1";
        case ScheduleKind::Power:
            return "alpha_k = c k^-(1+" + format_param(param_) + "), w_k = 1";
        case ScheduleKind::LogCorrected:
            return "alpha_k = c/[k (log k)^" + format_param(param_) + "], k >= " +
                   std::to_string(k_start_) + ", w_k = 1";
        case ScheduleKind::IteratedLog:
            return "alpha_k = c/[k log k (log log k)^2], k >= " + std::to_string(k_start_) +
                   ", w_k = 1";
        case ScheduleKind::WeightedDyadic:
            return "alpha_k = 2^-k, w_k = (6/pi^2) 2^k/k^2";
        case ScheduleKind::FractionalWeightedDyadic:
            return "alpha_k = 2^-k, w_k = c 2^(" + format_param(param_) + " k)/k^2";
        case ScheduleKind::Custom:
            return "user-supplied levels and weights (n = " + std::to_string(custom_size()) + ")";
    }
    return "?";
}

double LevelSchedule::b_at_log_index(double log_k) const {
    switch (kind_) {
        case ScheduleKind::Dyadic:
        case ScheduleKind::WeightedDyadic:
        case ScheduleKind::FractionalWeightedDyadic:
            return std::exp(log_k) * kLog2;
        case ScheduleKind::Power:
            return (1.0 + param_) * log_k - log_norm_;
        case ScheduleKind::LogCorrected:
            return log_k + param_ * std::log(log_k) - log_norm_;
        case ScheduleKind::IteratedLog:
            return log_k + std::log(log_k) + 2.0 * std::log(std::log(log_k)) - log_norm_;
        case ScheduleKind::Custom:
            throw std::logic_error("custom schedules have no analytic level scale");
    }
    return 0.0;
}

double LevelSchedule::b(std::int64_t k) const {
    switch (kind_) {
        case ScheduleKind::Dyadic:
        case ScheduleKind::WeightedDyadic:
        case ScheduleKind::FractionalWeightedDyadic:
            return static_cast<double>(k) * kLog2;
        case ScheduleKind::Custom:
            return k <= custom_size() ? custom_->b[static_cast<std::size_t>(k - 1)]
                                      : std::numeric_limits<double>::infinity();
        default:
            return b_at_log_index(std::log(static_cast<double>(k)));
    }
}

double LevelSchedule::alpha(std::int64_t k) const { return std::exp(-b(k)); }

double LevelSchedule::log_weight(std::int64_t k) const {
    const double kd = static_cast<double>(k);
    switch (kind_) {
        case ScheduleKind::WeightedDyadic:
            return log_norm_ + kd * kLog2 - 2.0 * std::log(kd);
        case ScheduleKind::FractionalWeightedDyadic:
            return log_norm_ + param_ * kd * kLog2 - 2.0 * std::log(kd);
        case ScheduleKind::Custom:
            return k <= custom_size() ? custom_->log_weight[static_cast<std::size_t>(k - 1)]
                                      : -std::numeric_limits<double>::infinity();
        default:
            return 0.0;
    }
}

Level LevelSchedule::level(std::int64_t k) const {
    if (k < k_start_)
        throw std::out_of_range("level index " + std::to_string(k) + " below schedule start " +
                                std::to_string(k_start_));
    if (kind_ == ScheduleKind::Custom && k > custom_size())
        throw std::out_of_range("level index " + std::to_string(k) +
                                " beyond the custom family of size " +
                                std::to_string(custom_size()));
    return Level{alpha(k), b(k), log_weight(k)};
}

double LevelSchedule::budget_term(std::int64_t k) const {
    const double kd = static_cast<double>(k);
    switch (kind_) {
        case ScheduleKind::Dyadic:
            return std::exp2(-kd);
        case ScheduleKind::Power:
            return norm_ * std::pow(kd, -(1.0 + param_));
        case ScheduleKind::LogCorrected:
            return norm_ / (kd * std::pow(std::log(kd), param_));
        case ScheduleKind::IteratedLog: {
            const double lk = std::log(kd);
            const double llk = std::log(lk);
            return norm_ / (kd * lk * llk * llk);
        }
        case ScheduleKind::WeightedDyadic:
            return norm_ / (kd * kd);
        case ScheduleKind::FractionalWeightedDyadic:
            return norm_ * std::exp2(-(1.0 - param_) * kd) / (kd * kd);
        case ScheduleKind::Custom:
            return k <= custom_size() ? custom_->budget_term[static_cast<std::size_t>(k - 1)]
                                      : 0.0;
    }
    return 0.0;
}

double LevelSchedule::partial_budget(std::int64_t k_max) const {
    if (k_max < k_start_)
        throw std::invalid_argument("partial_budget: truncation below the schedule start");
    KahanSum s;
    for (std::int64_t k = k_start_; k <= k_max; ++k) s.add(budget_term(k));
    return s.value();
}

}  // namespace wait
