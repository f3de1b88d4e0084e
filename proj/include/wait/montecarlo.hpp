#ifndef WAIT_MONTECARLO_HPP
#define WAIT_MONTECARLO_HPP

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "wait/numeric.hpp"

namespace wait {

struct MonteCarloConfig {
    std::int64_t n_paths = 1;
    std::int64_t horizon = 1;
    std::int64_t batch_size = 5000;
    std::uint64_t master_seed = 0;
    int threads = 0;  // 0 = hardware concurrency
};

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    std::int64_t n = 0;
};

// Sample mean with standard error s/sqrt(n) (n-1 denominator); needs n >= 2.
Estimate mean_with_se(std::span<const double> samples);

// Normal-approximation 95% interval p_hat +/- 1.96 sqrt(p_hat(1-p_hat)/n),
// clamped to [0,1].
std::pair<double, double> binomial_ci(double p_hat, std::int64_t n);

// Empirical quantiles with linear interpolation between order statistics.
std::vector<double> quantiles(std::vector<double> samples, std::span<const double> probs);

// Union of {0}, a geometric ladder of n_geometric points from 1 to the
// horizon, and n_linear equally spaced points ending at the horizon; sorted
// and deduplicated.
std::vector<std::int64_t> build_time_grid(std::int64_t horizon, int n_linear, int n_geometric);

// Smallest geometric count whose grid has exactly target_unique points;
// falls back to the closest achievable count.
int tune_geometric_count(std::int64_t horizon, int n_linear, int target_unique);

// (n_linear, n_geometric) reproducing target_unique points, scanning linear
// counts downward from ~85% of the target (the density of the main grid).
std::pair<int, int> tune_grid(std::int64_t horizon, int target_unique);

// Deterministic per-batch seed derivation from the master seed.
std::uint64_t batch_seed(std::uint64_t master_seed, std::int64_t batch_index);

std::int64_t batch_count(const MonteCarloConfig& config);
std::int64_t batch_paths(const MonteCarloConfig& config, std::int64_t batch_index);

// Runs fn(batch_index, seed, n_paths) for every batch on a worker pool and
// returns the results indexed by batch, so any reduction that folds them in
// order is independent of the worker count.
template <typename Fn>
auto run_batches(const MonteCarloConfig& config, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::int64_t, std::uint64_t, std::int64_t>> {
    using Result = std::invoke_result_t<Fn&, std::int64_t, std::uint64_t, std::int64_t>;
    const std::int64_t n_batches = batch_count(config);
    std::vector<Result> results(static_cast<std::size_t>(n_batches));

    int workers = config.threads > 0 ? config.threads
                                     : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    if (workers > n_batches) workers = static_cast<int>(n_batches);

    if (workers == 1) {
        for (std::int64_t b = 0; b < n_batches; ++b)
            results[static_cast<std::size_t>(b)] =
                fn(b, batch_seed(config.master_seed, b), batch_paths(config, b));
        return results;
    }

    std::atomic<std::int64_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto work = [&] {
        for (;;) {
            const std::int64_t b = next.fetch_add(1);
            if (b >= n_batches) return;
            try {
                results[static_cast<std::size_t>(b)] =
                    fn(b, batch_seed(config.master_seed, b), batch_paths(config, b));
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return results;
}

}  // namespace wait

#endif
