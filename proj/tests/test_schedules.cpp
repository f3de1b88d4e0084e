#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "wait/numeric.hpp"
#include "wait/schedules.hpp"

using namespace wait;

namespace {
constexpr double kLog2 = std::numbers::ln2;
constexpr double kBasel = 6.0 / (std::numbers::pi * std::numbers::pi);
}  // namespace

TEST_CASE("zeta summation with tail bracket") {
    // known closed form as oracle
    CHECK(std::abs(zeta_sum_with_tail(2.0, 1e-8) - std::numbers::pi * std::numbers::pi / 6.0) <
          1e-8);
    CHECK(std::abs(zeta_sum_with_tail(1.5, 1e-8) - 2.612375) < 1e-5);
    // slow series exercises the tail-bound path
    const double z11 = zeta_sum_with_tail(1.1, 1e-6);
    CHECK(std::isfinite(z11));
    CHECK(z11 > 10.0);
    CHECK_THROWS_AS(zeta_sum_with_tail(1.0, 1e-8), std::invalid_argument);
    CHECK_THROWS_AS(zeta_sum_with_tail(0.5, 1e-8), std::invalid_argument);
    CHECK_THROWS_AS(zeta_sum_with_tail(2.0, 0.0), std::invalid_argument);
}

TEST_CASE("dyadic schedule") {
    const auto s = LevelSchedule::dyadic();
    CHECK(s.alpha(1) == doctest::Approx(0.5));
    CHECK(s.b(1) == doctest::Approx(kLog2));
    CHECK(s.log_weight(1) == 0.0);
    CHECK(s.alpha(3) == doctest::Approx(0.125));
    CHECK(s.target_rho() == 0.0);
    // geometric series: the budget saturates at exactly one
    CHECK(s.partial_budget(60) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s.partial_budget(3) == doctest::Approx(0.875));
    CHECK(s.partial_budget(20) == doctest::Approx(1.0 - std::exp2(-20.0)));
}

TEST_CASE("power schedule") {
    const auto s = LevelSchedule::power(0.5);
    CHECK(std::abs(s.norm_constant() - 0.382793) < 1e-5);
    CHECK(s.b(1) == doctest::Approx(0.9601).epsilon(1e-3));  // log zeta(1.5)
    CHECK(s.alpha(4) == doctest::Approx(s.norm_constant() / 8.0));
    CHECK(s.target_rho() == doctest::Approx(2.0 / 3.0));
    CHECK(LevelSchedule::power(0.1).target_rho() == doctest::Approx(10.0 / 11.0));
    CHECK_THROWS_AS(LevelSchedule::power(0.0), std::invalid_argument);
    CHECK_THROWS_AS(LevelSchedule::power(-1.0), std::invalid_argument);
}

TEST_CASE("log-corrected schedule") {
    const auto s = LevelSchedule::log_corrected(2.0, 10);
    const double l10 = std::log(10.0);
    CHECK(s.alpha(10) == doctest::Approx(s.norm_constant() / (10.0 * l10 * l10)));
    CHECK(s.target_rho() == 1.0);
    CHECK(s.k_start() == 10);
    // conservative normalization keeps every finite budget below one
    CHECK(s.partial_budget(200000) <= 1.0);
    CHECK(s.partial_budget(200000) > 0.5);
    CHECK_THROWS_AS(LevelSchedule::log_corrected(1.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(LevelSchedule::log_corrected(2.0, 2), std::invalid_argument);
}

TEST_CASE("iterated-log schedule") {
    const auto s = LevelSchedule::iterated_log(16);
    const double lk = std::log(16.0);
    const double llk = std::log(lk);
    CHECK(s.alpha(16) == doctest::Approx(s.norm_constant() / (16.0 * lk * llk * llk)));
    // b_k = log k + log log k + 2 log log log k - log c
    for (std::int64_t k : {16, 100, 100000}) {
        const double expected = std::log(double(k)) + std::log(std::log(double(k))) +
                                2.0 * std::log(std::log(std::log(double(k)))) -
                                std::log(s.norm_constant());
        CHECK(s.b(k) == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(s.partial_budget(200000) <= 1.0);
    CHECK_THROWS_AS(LevelSchedule::iterated_log(15), std::invalid_argument);
}

TEST_CASE("weighted dyadic schedule") {
    const auto s = LevelSchedule::weighted_dyadic();
    CHECK(std::exp(s.log_weight(1)) == doctest::Approx(kBasel * 2.0).epsilon(1e-12));
    CHECK(std::abs(std::exp(s.log_weight(1)) - 1.21585) < 1e-4);
    CHECK(std::exp(s.log_weight(4)) == doctest::Approx(kBasel).epsilon(1e-12));  // 2^4/4^2 = 1
    // budget terms reduce to the Basel series
    CHECK(s.partial_budget(2) == doctest::Approx(kBasel * 1.25).epsilon(1e-12));
    CHECK(s.partial_budget(4) ==
          doctest::Approx(kBasel * (1.0 + 0.25 + 1.0 / 9.0 + 0.0625)).epsilon(1e-12));
    CHECK(s.partial_budget(60) == doctest::Approx(1.0).epsilon(1e-2));
    // log-space weight far beyond double range for the raw 2^k
    const double lw = s.log_weight(2000);
    CHECK(std::isfinite(lw));
    CHECK(lw == doctest::Approx(std::log(kBasel) + 2000.0 * kLog2 - 2.0 * std::log(2000.0))
                    .epsilon(1e-12));
}

TEST_CASE("fractional weighted dyadic schedule") {
    const auto s = LevelSchedule::fractional_weighted_dyadic(0.5);
    CHECK(std::abs(s.norm_constant() - 1.109) < 2e-3);
    CHECK(s.target_rho() == doctest::Approx(0.5));
    CHECK(s.target_rho() * 0.5 == doctest::Approx(0.25));  // target rho*I at I = 1/2
    CHECK(s.partial_budget(60) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS_AS(LevelSchedule::fractional_weighted_dyadic(0.0), std::invalid_argument);
    CHECK_THROWS_AS(LevelSchedule::fractional_weighted_dyadic(1.0), std::invalid_argument);
}

TEST_CASE("custom schedule from explicit lists") {
    const std::vector<double> alphas = {0.5, 0.2, 0.05};
    const std::vector<double> weights = {1.0, 2.0, 2.0};
    const auto s = LevelSchedule::custom(alphas, weights);
    CHECK(s.kind() == ScheduleKind::Custom);
    CHECK(s.k_start() == 1);
    CHECK(s.custom_size() == 3);
    CHECK(s.target_rho() == 0.0);  // finite family: W is eventually constant
    CHECK_FALSE(s.unit_weights());
    CHECK(s.b(2) == doctest::Approx(-std::log(0.2)).epsilon(1e-15));
    CHECK(std::exp(s.log_weight(3)) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.partial_budget(3) == doctest::Approx(0.5 + 0.4 + 0.1).epsilon(1e-12));
    // truncations beyond the family keep the full (finite) budget
    CHECK(s.partial_budget(100) == doctest::Approx(s.partial_budget(3)));
    CHECK_THROWS_AS(s.level(4), std::out_of_range);
    CHECK_NOTHROW(s.level(3));

    // weights default to one
    const auto unit = LevelSchedule::custom({0.5, 0.25});
    CHECK(unit.unit_weights());
    CHECK(unit.partial_budget(2) == doctest::Approx(0.75));

    CHECK_THROWS_AS(LevelSchedule::custom({}), std::invalid_argument);
    CHECK_THROWS_AS(LevelSchedule::custom({0.5, 0.5}), std::invalid_argument);   // not decreasing
    CHECK_THROWS_AS(LevelSchedule::custom({0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(LevelSchedule::custom({1.0, 0.5}), std::invalid_argument);   // outside (0,1)
    CHECK_THROWS_AS(LevelSchedule::custom({0.5}, {0.0}), std::invalid_argument);  // weight <= 0
    CHECK_THROWS_AS(LevelSchedule::custom({0.5}, {1.0, 2.0}), std::invalid_argument);
    // budget violation: 3 * 0.5 > 1
    CHECK_THROWS_AS(LevelSchedule::custom({0.5}, {3.0}), std::invalid_argument);
}

TEST_CASE("level accessor") {
    const auto dy = LevelSchedule::dyadic();
    const auto l2 = dy.level(2);
    CHECK(l2.alpha == doctest::Approx(0.25));
    CHECK(l2.b == doctest::Approx(2.0 * kLog2));
    CHECK(l2.log_weight == 0.0);
    CHECK_THROWS_AS(LevelSchedule::log_corrected(2.0, 10).level(9), std::out_of_range);
    CHECK_NOTHROW(LevelSchedule::log_corrected(2.0, 10).level(10));
}

TEST_CASE("string keys round-trip") {
    for (const auto& s : LevelSchedule::table_schedules()) {
        const auto reparsed = LevelSchedule::parse(s.key());
        CHECK(reparsed.key() == s.key());
        CHECK(reparsed.k_start() == s.k_start());
        CHECK(reparsed.norm_constant() == doctest::Approx(s.norm_constant()).epsilon(1e-15));
    }
    CHECK(LevelSchedule::parse("power:0.5").target_rho() == doctest::Approx(2.0 / 3.0));
    CHECK(LevelSchedule::parse("logcorr:2:10").k_start() == 10);
    CHECK_THROWS_AS(LevelSchedule::parse("nope"), std::invalid_argument);
    CHECK_THROWS_AS(LevelSchedule::parse("power"), std::invalid_argument);
    CHECK_THROWS_AS(LevelSchedule::parse("power:x"), std::invalid_argument);
    CHECK_THROWS_AS(LevelSchedule::parse("logcorr:2"), std::invalid_argument);
    CHECK_THROWS_AS(LevelSchedule::parse("itlog:16.5"), std::invalid_argument);
}

TEST_CASE("budget stays below one at every truncation") {
    for (const auto& s : LevelSchedule::table_schedules()) {
        KahanSum running;
        double worst = 0.0;
        for (std::int64_t k = s.k_start(); k <= 200000; ++k) {
            running.add(s.budget_term(k));
            worst = std::max(worst, running.value());
        }
        INFO(s.key());
        CHECK(worst <= 1.0 + 1e-12);
        CHECK(running.value() == doctest::Approx(s.partial_budget(200000)).epsilon(1e-15));
    }
}

TEST_CASE("levels decrease strictly (b increases) out to k = 1e6") {
    for (const auto& s : LevelSchedule::table_schedules()) {
        INFO(s.key());
        double prev = s.b(s.k_start());
        CHECK(prev > 0.0);
        bool monotone = true;
        for (std::int64_t k = s.k_start() + 1; k <= 1000000; ++k) {
            const double cur = s.b(k);
            if (!(cur > prev)) {
                monotone = false;
                break;
            }
            prev = cur;
        }
        CHECK(monotone);
        // alpha in (0,1), strictly decreasing where it is resolvable
        double prev_alpha = s.alpha(s.k_start());
        for (std::int64_t k = s.k_start(); k < s.k_start() + 500; ++k) {
            const double a = s.alpha(k);
            CHECK(a > 0.0);
            CHECK(a < 1.0);
            if (k > s.k_start()) CHECK(a < prev_alpha);
            prev_alpha = a;
        }
    }
}

TEST_CASE("weighted dyadic partial sums stay within the geometric bracket") {
    // S_n = sum_{k<=n} 2^k/k^2 obeys a_n <= S_n <= 6 a_n, checked in log
    // space; direct search shows the bracket holds from n = 1 on.
    double log_s = kNegInfinity;
    for (std::int64_t n = 1; n <= 3000; ++n) {
        const double log_a = n * kLog2 - 2.0 * std::log(double(n));
        log_s = log_add_exp(log_s, log_a);
        INFO("n = " << n);
        CHECK(log_s >= log_a - 1e-12);
        CHECK(log_s <= std::log(6.0) + log_a + 1e-12);
    }
}
