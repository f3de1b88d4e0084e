#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "wait/numeric.hpp"
#include "wait/profile.hpp"
#include "wait/schedules.hpp"

using namespace wait;

namespace {

constexpr double kLog2 = std::numbers::ln2;
constexpr double kBasel = 6.0 / (std::numbers::pi * std::numbers::pi);

// Brute-force log W(x) by enumerating levels until b_k > x; only usable
// where the enumeration is finite, which the callers guarantee.
double brute_log_W(const LevelSchedule& s, double x) {
    double acc = kNegInfinity;
    for (std::int64_t k = s.k_start();; ++k) {
        if (s.b(k) > x) break;
        acc = log_add_exp(acc, s.log_weight(k));
    }
    return acc;
}

}  // namespace

TEST_CASE("profile construction and tabulation") {
    ProfileTable dyadic(LevelSchedule::dyadic(), 5.0);
    CHECK(dyadic.table_size() == 7);  // floor(5 / log 2)
    CHECK_FALSE(dyadic.empty());

    ProfileTable wdy(LevelSchedule::weighted_dyadic(), 1650.0);
    CHECK(wdy.table_size() == 2380);

    // exactly one level when the range stops at the first threshold
    const auto lc = LevelSchedule::log_corrected(2.0, 10);
    ProfileTable lone(lc, lc.b(10));
    CHECK(lone.counting_N(lc.b(10)) == 1);
    ProfileTable wlone(LevelSchedule::weighted_dyadic(), kLog2);
    CHECK(wlone.table_size() == 1);

    // range below the first level: allowed but flagged, W == 0 throughout
    ProfileTable below(LevelSchedule::power(0.1), 2.0);  // b_1 = log zeta(1.1) > 2
    CHECK(below.empty());
    CHECK(below.log_W(1.5) == kNegInfinity);

    CHECK_THROWS_AS(ProfileTable(LevelSchedule::dyadic(), -1.0), std::invalid_argument);
}

TEST_CASE("log W point values") {
    ProfileTable dyadic(LevelSchedule::dyadic(), 10.0);
    CHECK(dyadic.log_W(2.1) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(dyadic.log_W(0.5) == kNegInfinity);  // below b_1

    ProfileTable wdy(LevelSchedule::weighted_dyadic(), 10.0);
    const double expected = std::log(kBasel * (2.0 + 1.0 + 8.0 / 9.0));
    CHECK(wdy.log_W(2.1) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::exp(wdy.log_W(2.1)) == doctest::Approx(2.364).epsilon(1e-3));

    CHECK_THROWS_AS(dyadic.log_W(10.5), std::out_of_range);
    CHECK_THROWS_AS(dyadic.log_W(-0.1), std::out_of_range);
}

TEST_CASE("boundary is non-strict: W jumps exactly at b_k") {
    for (const auto& s : LevelSchedule::table_schedules()) {
        INFO(s.key());
        ProfileTable profile(s, s.b(s.k_start() + 12) + 1.0);
        for (std::int64_t k = s.k_start(); k <= s.k_start() + 12; ++k) {
            const double at = profile.log_W(s.b(k));
            const double just_below = profile.log_W(std::nextafter(s.b(k), 0.0));
            CHECK(at > just_below);  // level k is included at its own threshold
        }
    }
}

TEST_CASE("profile exponent approaches rho at x = 1650") {
    for (const auto& s : LevelSchedule::table_schedules()) {
        INFO(s.key());
        ProfileTable profile(s, 1650.0);
        const double e = profile.exponent(1650.0);
        CHECK(std::abs(e - s.target_rho()) <= 0.02);
    }
    ProfileTable dyadic(LevelSchedule::dyadic(), 1650.0);
    CHECK(dyadic.exponent(1650.0) <= 0.01);
    CHECK(dyadic.exponent(1650.0) == doctest::Approx(0.0047).epsilon(0.05));

    ProfileTable p(LevelSchedule::power(0.5), 1650.0);
    CHECK_THROWS_AS(p.exponent(0.5), UndefinedExponent);  // W = 0 there
}

TEST_CASE("inversion consistency: exponent times the level-scale constant") {
    // b_k / log k -> c implies exponent -> 1/c
    const std::pair<const char*, double> cases[] = {
        {"power:0.5", 1.5}, {"power:0.1", 1.1}, {"logcorr:2:10", 1.0}, {"itlog:16", 1.0}};
    for (const auto& [key, c] : cases) {
        INFO(key);
        ProfileTable profile(LevelSchedule::parse(key), 1650.0);
        CHECK(std::abs(profile.exponent(1650.0) * c - 1.0) <= 0.03);
    }
}

TEST_CASE("envelope slack never exceeds zero") {
    for (const auto& s : LevelSchedule::table_schedules()) {
        INFO(s.key());
        ProfileTable profile(s, 1650.0);
        for (int i = 0; i < 700; ++i) {
            const double x = 2.0 + (1650.0 - 2.0) * i / 699.0;
            CHECK(profile.envelope_slack(x) <= 0.0);
        }
    }
    ProfileTable dyadic(LevelSchedule::dyadic(), 5.0);
    CHECK(dyadic.envelope_slack(kLog2) == doctest::Approx(-kLog2));  // log 1 - log 2
    CHECK(dyadic.envelope_slack(0.1) == kNegInfinity);
}

TEST_CASE("counting function") {
    ProfileTable dyadic(LevelSchedule::dyadic(), 10.0);
    CHECK(dyadic.counting_N(5.0) == 7);
    CHECK(dyadic.counting_N(0.5) == 0);

    const auto p5 = LevelSchedule::power(0.5);
    ProfileTable pp(p5, 50.0);
    CHECK(pp.counting_N(p5.b(10)) == 10);  // N(b_k) = k
    for (std::int64_t k : {1, 2, 7, 100, 5000})
        CHECK(pp.counting_N(p5.b(k)) == k);

    const auto lc = LevelSchedule::log_corrected(2.0, 10);
    ProfileTable lp(lc, 40.0);
    for (std::int64_t k : {10, 11, 57, 4000, 1000000})
        CHECK(lp.counting_N(lc.b(k)) == k - 10 + 1);

    const auto il = LevelSchedule::iterated_log(16);
    ProfileTable ip(il, 40.0);
    for (std::int64_t k : {16, 17, 300, 250000})
        CHECK(ip.counting_N(il.b(k)) == k - 16 + 1);

    ProfileTable wdy(LevelSchedule::weighted_dyadic(), 10.0);
    CHECK_THROWS_AS(wdy.counting_N(5.0), WrongScheduleKind);

    // counts beyond integer range are rejected rather than truncated
    ProfileTable big(lc, 1650.0);
    CHECK_THROWS_AS(big.counting_N(1650.0), std::overflow_error);
    CHECK(std::isfinite(big.log_W(1650.0)));
}

TEST_CASE("monotonicity of log W over random pairs") {
    std::mt19937_64 rng(7);
    for (const auto& s : LevelSchedule::table_schedules()) {
        INFO(s.key());
        ProfileTable profile(s, 1650.0);
        std::uniform_real_distribution<double> u(0.0, 1650.0);
        for (int i = 0; i < 10000; ++i) {
            double a = u(rng), b = u(rng);
            if (a > b) std::swap(a, b);
            CHECK(profile.log_W(a) <= profile.log_W(b));
        }
    }
}

TEST_CASE("oracle equivalence against brute-force enumeration") {
    // draw x where the enumeration is finite: below b(K_enum) per schedule
    constexpr std::int64_t kEnumCap = 200000;
    std::mt19937_64 rng(11);
    for (const auto& s : LevelSchedule::table_schedules()) {
        INFO(s.key());
        const double x_hi = std::min(1650.0, s.b(kEnumCap));
        ProfileTable profile(s, 1650.0);
        std::uniform_real_distribution<double> u(0.0, x_hi);
        for (int i = 0; i < 100; ++i) {
            const double x = u(rng);
            const double fast = profile.log_W(x);
            const double brute = brute_log_W(s, x);
            if (fast == kNegInfinity || brute == kNegInfinity)
                CHECK(fast == brute);
            else
                CHECK(std::abs(fast - brute) <= 1e-9);
        }
    }
}

TEST_CASE("log-prefix increments reproduce the weights") {
    for (const auto* key : {"dyadic", "wdyadic", "fwdyadic:0.5"}) {
        INFO(key);
        const auto s = LevelSchedule::parse(key);
        ProfileTable profile(s, 300.0);
        const auto& prefix = profile.log_prefix();
        REQUIRE(prefix.size() >= 100);
        for (std::size_t j = 1; j < prefix.size(); ++j) {
            CHECK(prefix[j] >= prefix[j - 1]);
            // log-space difference: log(exp(p_j) - exp(p_{j-1})) vs log w
            const double diff = prefix[j] + std::log1p(-std::exp(prefix[j - 1] - prefix[j]));
            const double lw = s.log_weight(s.k_start() + static_cast<std::int64_t>(j));
            CHECK(diff == doctest::Approx(lw).epsilon(1e-9));
        }
        // direct linear-space check where magnitudes permit
        for (std::size_t j = 1; j < std::min<std::size_t>(prefix.size(), 40); ++j) {
            const double direct = std::exp(prefix[j]) - std::exp(prefix[j - 1]);
            const double w = std::exp(s.log_weight(s.k_start() + static_cast<std::int64_t>(j)));
            CHECK(direct == doctest::Approx(w).epsilon(1e-9));
        }
    }
}

TEST_CASE("profile over an explicit custom family") {
    const auto s = LevelSchedule::custom({0.5, 0.2, 0.05}, {1.0, 2.0, 2.0});
    ProfileTable profile(s, 10.0);
    CHECK(profile.table_size() == 3);
    CHECK(profile.log_W(0.5) == kNegInfinity);  // below b_1 = log 2
    CHECK(profile.log_W(1.0) == doctest::Approx(std::log(1.0)).epsilon(1e-12));
    CHECK(profile.log_W(2.0) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(profile.log_W(10.0) == doctest::Approx(std::log(5.0)).epsilon(1e-12));
    // the boundary includes the level exactly at its threshold
    CHECK(profile.log_W(-std::log(0.2)) == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    for (double x : {0.8, 1.7, 3.1, 9.9}) CHECK(profile.envelope_slack(x) <= 0.0);

    const auto unit = LevelSchedule::custom({0.5, 0.25, 0.125});
    ProfileTable counting(unit, 5.0);
    CHECK(counting.counting_N(2.0) == 2);
    CHECK(counting.counting_N(5.0) == 3);  // the family ends, N stays put
    ProfileTable weighted(s, 5.0);
    CHECK_THROWS_AS(weighted.counting_N(2.0), WrongScheduleKind);
}

TEST_CASE("envelope holds at tabulated thresholds") {
    ProfileTable wdy(LevelSchedule::weighted_dyadic(), 800.0);
    const auto& bs = wdy.b_values();
    const auto& prefix = wdy.log_prefix();
    for (std::size_t j = 0; j < bs.size(); ++j) CHECK(prefix[j] <= bs[j]);
}
