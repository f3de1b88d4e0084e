#ifndef WAIT_EXPERIMENTS_HPP
#define WAIT_EXPERIMENTS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wait/numeric.hpp"

namespace wait {

// Shared experiment knobs.  Every experiment is a pure function of its
// config and seed; rerunning with the same values reproduces the CSV bytes.
struct RunConfig {
    std::uint64_t seed = 20260809ULL;
    double scale = 1.0;  // multiplies path counts; horizons are untouched
    std::int64_t batch = 5000;
    int threads = 0;  // 0 = hardware concurrency; results do not depend on it
    double eta = 1e-12;
    std::optional<std::int64_t> paths;
    std::optional<std::int64_t> horizon;

    // Accepted keys: seed, scale, batch, threads, eta, paths, horizon.
    static RunConfig from_key_values(const std::map<std::string, std::string>& kv);
};

struct AssertionRecord {
    std::string name;
    bool pass = false;
    double observed = 0.0;
    double bound = 0.0;
};

using CsvCell = std::variant<std::int64_t, double, std::string>;

struct ExperimentResult {
    int id = 0;
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<CsvCell>> rows;
    std::vector<AssertionRecord> assertions;
    std::vector<std::pair<std::string, std::string>> params;  // fully resolved
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;

    bool passed() const;
    std::string csv_text() const;
};

// exp4 output plus the arrays exp5 consumes without new simulation.
struct Exp4Output {
    ExperimentResult result;
    std::vector<std::int64_t> positive_grid;
    std::vector<std::string> schedule_keys;
    std::vector<double> schedule_rho;
    double information_rate = 0.0;
    Matrix<double> epower_mean;                  // [schedule x positive grid point]
    Matrix<double> epower_se;
    std::vector<std::vector<double>> final_rates;  // per schedule, per path
};

ExperimentResult exp1_profiles();
ExperimentResult exp2_sprt_size(const RunConfig& rc);
ExperimentResult exp3_first_passage(const RunConfig& rc);
Exp4Output exp4_epower(const RunConfig& rc);
ExperimentResult exp5_fullrate_speed(const Exp4Output& main);
ExperimentResult exp6_null_validity(const RunConfig& rc);
ExperimentResult exp7_kl_scaling(const RunConfig& rc);
ExperimentResult exp8_delayed_tests(const RunConfig& rc,
                                    std::vector<double> gammas = {1.0, 1.25, 1.5, 2.0});
ExperimentResult exp9_counterexample(const RunConfig& rc);
ExperimentResult exp10_capital_budget();

// id in 1..10; exp5 runs exp4 internally when invoked on its own.
ExperimentResult run_experiment(int id, const RunConfig& rc);
std::vector<ExperimentResult> run_all(const RunConfig& rc);

// The scheme table (definition, rho, target rho*I at I = 1/2), derived from
// the schedule objects rather than hardcoded.
std::string schedule_table_text();

void write_experiment_csv(const ExperimentResult& result, const std::string& out_dir);
std::string summary_json(std::span<const ExperimentResult> results);

}  // namespace wait

#endif
