#include "wait.h"

#include <cstdlib>
#include <cstring>
#include <optional>
#include <string>

#include "wait/aggregate.hpp"
#include "wait/experiments.hpp"
#include "wait/gaussian.hpp"
#include "wait/io.hpp"
#include "wait/montecarlo.hpp"
#include "wait/profile.hpp"
#include "wait/schedules.hpp"

struct wait_schedule {
    wait::LevelSchedule impl;
};

struct wait_profile {
    wait::ProfileTable impl;
};

namespace {

thread_local std::string g_last_error;

wait_status fail(wait_status code, const std::string& message) {
    g_last_error = message;
    return code;
}

template <typename Fn>
wait_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const wait::WrongScheduleKind& e) {
        return fail(WAIT_ERR_WRONG_KIND, e.what());
    } catch (const wait::io::IoError& e) {
        return fail(WAIT_ERR_IO, e.what());
    } catch (const std::invalid_argument& e) {
        return fail(WAIT_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::domain_error& e) {
        return fail(WAIT_ERR_OUT_OF_RANGE, e.what());
    } catch (const std::out_of_range& e) {
        return fail(WAIT_ERR_OUT_OF_RANGE, e.what());
    } catch (const std::overflow_error& e) {
        return fail(WAIT_ERR_OUT_OF_RANGE, e.what());
    } catch (const std::exception& e) {
        return fail(WAIT_ERR_INTERNAL, e.what());
    }
}

wait_status check_pointer(const void* p, const char* what) {
    if (p) return WAIT_OK;
    return fail(WAIT_ERR_INVALID_ARGUMENT, std::string("null pointer: ") + what);
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

wait::RunConfig config_from_text(const char* config) {
    const auto kv = wait::io::parse_key_values(config ? config : "");
    return wait::RunConfig::from_key_values(kv);
}

wait_status finish_run(const std::vector<wait::ExperimentResult>& results, const char* out_dir,
                       char** summary_json) {
    for (const auto& r : results) wait::write_experiment_csv(r, out_dir);
    const std::string summary = wait::summary_json(results);
    wait::io::write_text_file(std::string(out_dir) + "/summary.json", summary);
    if (summary_json) *summary_json = copy_string(summary);
    for (const auto& r : results)
        if (!r.passed())
            return fail(WAIT_ERR_ASSERTION_FAILED,
                        r.name + ": an assertion failed; see summary.json");
    return WAIT_OK;
}

}  // namespace

extern "C" {

const char* wait_last_error(void) { return g_last_error.c_str(); }

wait_status wait_schedule_create(const char* key, wait_schedule** out) {
    if (auto s = check_pointer(key, "key"); s != WAIT_OK) return s;
    if (auto s = check_pointer(out, "out"); s != WAIT_OK) return s;
    return guarded([&] {
        *out = new wait_schedule{wait::LevelSchedule::parse(key)};
        return WAIT_OK;
    });
}

wait_status wait_schedule_create_custom(const double* alphas, const double* weights, size_t n,
                                        wait_schedule** out) {
    if (auto s = check_pointer(alphas, "alphas"); s != WAIT_OK) return s;
    if (auto s = check_pointer(out, "out"); s != WAIT_OK) return s;
    return guarded([&] {
        std::vector<double> a(alphas, alphas + n);
        std::vector<double> w;
        if (weights) w.assign(weights, weights + n);
        *out = new wait_schedule{wait::LevelSchedule::custom(std::move(a), std::move(w))};
        return WAIT_OK;
    });
}

void wait_schedule_free(wait_schedule* schedule) { delete schedule; }

wait_status wait_schedule_level(const wait_schedule* schedule, int64_t k, double* alpha, double* b,
                                double* log_weight) {
    if (auto s = check_pointer(schedule, "schedule"); s != WAIT_OK) return s;
    return guarded([&] {
        const wait::Level level = schedule->impl.level(k);
        if (alpha) *alpha = level.alpha;
        if (b) *b = level.b;
        if (log_weight) *log_weight = level.log_weight;
        return WAIT_OK;
    });
}

wait_status wait_schedule_partial_budget(const wait_schedule* schedule, int64_t k_max,
                                         double* out) {
    if (auto s = check_pointer(schedule, "schedule"); s != WAIT_OK) return s;
    if (auto s = check_pointer(out, "out"); s != WAIT_OK) return s;
    return guarded([&] {
        *out = schedule->impl.partial_budget(k_max);
        return WAIT_OK;
    });
}

wait_status wait_schedule_info(const wait_schedule* schedule, int64_t* k_start, double* target_rho,
                               double* norm_constant) {
    if (auto s = check_pointer(schedule, "schedule"); s != WAIT_OK) return s;
    if (k_start) *k_start = schedule->impl.k_start();
    if (target_rho) *target_rho = schedule->impl.target_rho();
    if (norm_constant) *norm_constant = schedule->impl.norm_constant();
    return WAIT_OK;
}

wait_status wait_profile_build(const wait_schedule* schedule, double x_max, wait_profile** out) {
    if (auto s = check_pointer(schedule, "schedule"); s != WAIT_OK) return s;
    if (auto s = check_pointer(out, "out"); s != WAIT_OK) return s;
    return guarded([&] {
        *out = new wait_profile{wait::ProfileTable(schedule->impl, x_max)};
        return WAIT_OK;
    });
}

void wait_profile_free(wait_profile* profile) { delete profile; }

wait_status wait_profile_log_weight_sum(const wait_profile* profile, double x, double* out) {
    if (auto s = check_pointer(profile, "profile"); s != WAIT_OK) return s;
    if (auto s = check_pointer(out, "out"); s != WAIT_OK) return s;
    return guarded([&] {
        *out = profile->impl.log_W(x);
        return WAIT_OK;
    });
}

wait_status wait_profile_exponent(const wait_profile* profile, double x, double* out) {
    if (auto s = check_pointer(profile, "profile"); s != WAIT_OK) return s;
    if (auto s = check_pointer(out, "out"); s != WAIT_OK) return s;
    return guarded([&] {
        *out = profile->impl.exponent(x);
        return WAIT_OK;
    });
}

wait_status wait_profile_envelope_slack(const wait_profile* profile, double x, double* out) {
    if (auto s = check_pointer(profile, "profile"); s != WAIT_OK) return s;
    if (auto s = check_pointer(out, "out"); s != WAIT_OK) return s;
    return guarded([&] {
        *out = profile->impl.envelope_slack(x);
        return WAIT_OK;
    });
}

wait_status wait_profile_count(const wait_profile* profile, double x, int64_t* out) {
    if (auto s = check_pointer(profile, "profile"); s != WAIT_OK) return s;
    if (auto s = check_pointer(out, "out"); s != WAIT_OK) return s;
    return guarded([&] {
        *out = profile->impl.counting_N(x);
        return WAIT_OK;
    });
}

wait_status wait_zeta_sum_with_tail(double s_exp, double tol, double* out) {
    if (auto s = check_pointer(out, "out"); s != WAIT_OK) return s;
    return guarded([&] {
        *out = wait::zeta_sum_with_tail(s_exp, tol);
        return WAIT_OK;
    });
}

wait_status wait_experiment_run(int experiment_id, const char* config, const char* out_dir,
                                char** summary_json) {
    if (auto s = check_pointer(out_dir, "out_dir"); s != WAIT_OK) return s;
    return guarded([&] {
        const auto rc = config_from_text(config);
        std::vector<wait::ExperimentResult> results;
        results.push_back(wait::run_experiment(experiment_id, rc));
        return finish_run(results, out_dir, summary_json);
    });
}

wait_status wait_experiment_run_all(const char* config, const char* out_dir,
                                    char** summary_json) {
    if (auto s = check_pointer(out_dir, "out_dir"); s != WAIT_OK) return s;
    return guarded([&] {
        const auto rc = config_from_text(config);
        const auto results = wait::run_all(rc);
        return finish_run(results, out_dir, summary_json);
    });
}

wait_status wait_schedule_table(char** text) {
    if (auto s = check_pointer(text, "text"); s != WAIT_OK) return s;
    return guarded([&] {
        *text = copy_string(wait::schedule_table_text());
        return WAIT_OK;
    });
}

wait_status wait_simulate_run(const char* config, const char* out_dir, char** summary_json) {
    if (auto s = check_pointer(out_dir, "out_dir"); s != WAIT_OK) return s;
    return guarded([&] {
        auto kv = wait::io::parse_key_values(config ? config : "");
        double mu = 1.0;
        wait::Hypothesis hypothesis = wait::Hypothesis::Null;
        std::int64_t grid_linear = 0, grid_geometric = 0;
        std::int64_t paths = 100, horizon = 1000;
        if (auto it = kv.find("mu"); it != kv.end()) {
            mu = std::stod(it->second);
            kv.erase(it);
        }
        if (auto it = kv.find("hypothesis"); it != kv.end()) {
            if (it->second == "null")
                hypothesis = wait::Hypothesis::Null;
            else if (it->second == "alternative")
                hypothesis = wait::Hypothesis::Alternative;
            else
                throw std::invalid_argument("hypothesis must be 'null' or 'alternative'");
            kv.erase(it);
        }
        if (auto it = kv.find("grid_linear"); it != kv.end()) {
            grid_linear = std::stoll(it->second);
            kv.erase(it);
        }
        if (auto it = kv.find("grid_geometric"); it != kv.end()) {
            grid_geometric = std::stoll(it->second);
            kv.erase(it);
        }
        const auto rc = wait::RunConfig::from_key_values(kv);
        if (rc.paths) paths = *rc.paths;
        if (rc.horizon) horizon = *rc.horizon;
        if (grid_linear <= 0) grid_linear = std::min<std::int64_t>(horizon, 100);

        const auto grid = wait::build_time_grid(horizon, static_cast<int>(grid_linear),
                                                static_cast<int>(grid_geometric));
        const wait::GaussianBed bed{mu, hypothesis};
        const wait::MonteCarloConfig mc{paths, horizon, rc.batch, rc.seed, rc.threads};
        auto batches = wait::run_batches(mc, [&](std::int64_t, std::uint64_t seed,
                                                 std::int64_t n) {
            return wait::simulate_running_max(bed, n, horizon, grid, seed);
        });

        wait::ExperimentResult r;
        r.id = 0;
        r.name = "simulate";
        r.columns = {"path", "t", "H"};
        std::int64_t path_index = 0;
        for (const auto& batch : batches)
            for (std::size_t i = 0; i < batch.n_paths(); ++i, ++path_index)
                for (std::size_t j = 0; j < batch.grid.size(); ++j)
                    r.rows.push_back({path_index, batch.grid[j], batch.running_max(i, j)});
        r.seed = rc.seed;
        r.params = {{"paths", std::to_string(paths)},
                    {"horizon", std::to_string(horizon)},
                    {"mu", wait::io::format_double(mu)},
                    {"hypothesis", hypothesis == wait::Hypothesis::Null ? "null" : "alternative"},
                    {"grid_points", std::to_string(grid.size())},
                    {"seed", std::to_string(rc.seed)},
                    {"batch", std::to_string(rc.batch)}};

        std::vector<wait::ExperimentResult> results;
        results.push_back(std::move(r));
        return finish_run(results, out_dir, summary_json);
    });
}

void wait_string_free(char* text) { std::free(text); }

}  // extern "C"
