#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <string>

#include "wait/experiments.hpp"
#include "wait/io.hpp"

using namespace wait;

namespace {

RunConfig scaled(double scale, std::uint64_t seed = 20260809ULL) {
    RunConfig rc;
    rc.scale = scale;
    rc.seed = seed;
    return rc;
}

const AssertionRecord* find_assertion(const ExperimentResult& r, const std::string& name) {
    for (const auto& a : r.assertions)
        if (a.name == name) return &a;
    return nullptr;
}

std::string column_join(const ExperimentResult& r) {
    std::string out;
    for (const auto& c : r.columns) out += c + ",";
    return out;
}

}  // namespace

TEST_CASE("run config parsing") {
    std::map<std::string, std::string> kv = {{"seed", "7"},      {"paths", "1000"},
                                             {"horizon", "360"}, {"batch", "250"},
                                             {"scale", "0.5"},   {"threads", "3"}};
    const auto rc = RunConfig::from_key_values(kv);
    CHECK(rc.seed == 7);
    CHECK(*rc.paths == 1000);
    CHECK(*rc.horizon == 360);
    CHECK(rc.batch == 250);
    CHECK(rc.scale == doctest::Approx(0.5));
    CHECK(rc.threads == 3);

    CHECK_THROWS_AS(RunConfig::from_key_values({{"bogus", "1"}}), std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::from_key_values({{"paths", "x"}}), std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::from_key_values({{"scale", "-1"}}), std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::from_key_values({{"eta", "2"}}), std::invalid_argument);
}

TEST_CASE("config text round-trips through the key=value parser") {
    const auto kv = io::parse_key_values("# comment\npaths=20000\nhorizon = 2500 \n\nseed=9\n");
    CHECK(kv.at("paths") == "20000");
    CHECK(kv.at("horizon") == "2500");
    CHECK(kv.at("seed") == "9");
    CHECK_THROWS_AS(io::parse_key_values("not a pair"), std::invalid_argument);
}

TEST_CASE("exp1 is deterministic and passes its envelope checks") {
    const auto r = exp1_profiles();
    CHECK(r.passed());
    CHECK(column_join(r) == "schedule,x,log_W,exponent,envelope_slack,");
    CHECK(r.rows.size() == 7 * 700);
    const auto again = exp1_profiles();
    CHECK(r.csv_text() == again.csv_text());
}

TEST_CASE("exp2 at reduced scale") {
    const auto r = exp2_sprt_size(scaled(0.02));
    CHECK(r.passed());
    CHECK(column_join(r) == "alpha,p_hat,ci_lo,ci_hi,");
    CHECK(r.rows.size() == 24);
    // p_hat column lies inside the CI columns by construction
    const auto& row = r.rows.front();
    CHECK(std::get<double>(row[2]) <= std::get<double>(row[1]));
    CHECK(std::get<double>(row[1]) <= std::get<double>(row[3]));
}

TEST_CASE("exp3 at reduced scale") {
    const auto r = exp3_first_passage(scaled(0.1));
    CHECK(r.passed());
    CHECK(column_join(r) == "b,mean_ratio,median_ratio,q10,q90,");
    CHECK(r.rows.size() == 70);
    const auto* censor = find_assertion(r, "censoring_at_max_b");
    REQUIRE(censor != nullptr);
    CHECK(censor->observed == 0.0);
}

TEST_CASE("exp3 reports censoring when the horizon is too short") {
    RunConfig rc = scaled(0.01);
    rc.horizon = 50;  // far below the passage times of the largest thresholds
    const auto r = exp3_first_passage(rc);
    CHECK_FALSE(r.passed());
    const auto* censor = find_assertion(r, "censoring_at_max_b");
    REQUIRE(censor != nullptr);
    CHECK_FALSE(censor->pass);
}

TEST_CASE("exp4 and exp5 at reduced scale") {
    const auto main = exp4_epower(scaled(0.05));
    CHECK(main.result.passed());
    CHECK(column_join(main.result) == "schedule,t,epower_mean,epower_se,log_growth_mean,");
    CHECK(main.positive_grid.size() == 290);
    CHECK(main.result.rows.size() == 7 * 290);
    CHECK(main.schedule_keys.size() == 7);
    const auto* shared = find_assertion(main.result, "shared_H_across_schedules");
    REQUIRE(shared != nullptr);
    CHECK(shared->pass);

    const auto speed = exp5_fullrate_speed(main);
    CHECK(speed.passed());
    CHECK(column_join(speed) == "schedule,metric,arg,value,");
    // three full-rate schedules: gaps + reach rows + quartiles + target
    CHECK(speed.rows.size() == 3 * (290 + 3 + 3 + 1));
    bool saw_no_sim = false;
    for (const auto& [k, v] : speed.params)
        saw_no_sim = saw_no_sim || (k == "no_new_simulation" && v == "true");
    CHECK(saw_no_sim);
}

TEST_CASE("exp6 at reduced scale") {
    const auto r = exp6_null_validity(scaled(0.04));
    CHECK(r.passed());
    CHECK(column_join(r) == "schedule,kind,param,mean,se,");
    CHECK(r.rows.size() == 4 * (170 + 4));  // fixed rows per grid point + stopped rows
}

TEST_CASE("exp7 at reduced scale") {
    const auto r = exp7_kl_scaling(scaled(0.05));
    CHECK(r.passed());
    CHECK(column_join(r) == "mu,t,info_time,epower_mean,epower_se,normalized,");
    CHECK(r.rows.size() == 4 * 179);  // 180-point grids, t = 0 excluded
    bool horizons_match = false;
    for (const auto& [k, v] : r.params)
        horizons_match = horizons_match || (k == "horizons" && v == "6000,2344,1500,960");
    CHECK(horizons_match);  // ceil(750 / I) per mu
}

TEST_CASE("exp8 at reduced scale") {
    const auto r = exp8_delayed_tests(scaled(0.05));
    CHECK(r.passed());
    CHECK(column_join(r) == "gamma,t,epower_mean,epower_se,");
    CHECK(r.rows.size() == 4 * 290);
    CHECK_THROWS_AS(exp8_delayed_tests(scaled(0.05), {0.5}), std::invalid_argument);
}

TEST_CASE("exp9 at reduced scale") {
    const auto r = exp9_counterexample(scaled(0.5));
    CHECK(r.passed());
    CHECK(column_join(r) == "kind,y,t,value,");
    CHECK(r.rows.size() == 2 * 290 + 15000);
}

TEST_CASE("exp10 budgets") {
    const auto r = exp10_capital_budget();
    CHECK(r.passed());
    CHECK(column_join(r) == "schedule,K,partial_budget,");
    // dyadic rows are exact geometric partial sums
    bool found = false;
    for (const auto& row : r.rows)
        if (std::get<std::string>(row[0]) == "dyadic" && std::get<std::int64_t>(row[1]) == 16) {
            CHECK(std::get<double>(row[2]) == doctest::Approx(1.0 - std::exp2(-16.0)).epsilon(1e-15));
            found = true;
        }
    CHECK(found);
}

TEST_CASE("experiment dispatch validates ids") {
    CHECK_THROWS_AS(run_experiment(0, scaled(0.1)), std::invalid_argument);
    CHECK_THROWS_AS(run_experiment(11, scaled(0.1)), std::invalid_argument);
}

TEST_CASE("reruns are byte-identical and worker-count independent") {
    RunConfig rc = scaled(0.02, 4321);
    rc.threads = 1;
    const auto a = exp2_sprt_size(rc);
    rc.threads = 2;
    const auto b = exp2_sprt_size(rc);
    CHECK(a.csv_text() == b.csv_text());

    RunConfig rc4 = scaled(0.02, 4321);
    rc4.threads = 1;
    const auto c = exp4_epower(rc4);
    rc4.threads = 2;
    const auto d = exp4_epower(rc4);
    CHECK(c.result.csv_text() == d.result.csv_text());

    // a different seed must change the data
    const auto e = exp2_sprt_size(scaled(0.02, 9999));
    CHECK(a.csv_text() != e.csv_text());
}

TEST_CASE("summary json carries assertions and resolved params") {
    const auto r = exp10_capital_budget();
    std::vector<ExperimentResult> results = {r};
    const auto text = summary_json(results);
    CHECK(text.find("\"experiment\": \"exp10\"") != std::string::npos);
    CHECK(text.find("\"assertion\": \"budget_le_one_dyadic\"") != std::string::npos);
    CHECK(text.find("\"status\": \"pass\"") != std::string::npos);
    CHECK(text.find("\"k_cap\": \"200000\"") != std::string::npos);
}

TEST_CASE("schedule table text is generated from the schedules") {
    const auto text = schedule_table_text();
    CHECK(text.find("wdyadic") != std::string::npos);
    CHECK(text.find("0.4545") != std::string::npos);  // power:0.1 target
    CHECK(text.find("0.25") != std::string::npos);    // fractional weighted dyadic target
    CHECK(text.find("0.3333") != std::string::npos);  // power:0.5 target
}
