#include "wait/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wait {

Estimate mean_with_se(std::span<const double> samples) {
    const std::int64_t n = static_cast<std::int64_t>(samples.size());
    if (n < 2) throw std::invalid_argument("mean_with_se: need at least two samples");
    KahanSum sum;
    for (double x : samples) sum.add(x);
    const double mean = sum.value() / static_cast<double>(n);
    KahanSum ss;
    for (double x : samples) ss.add((x - mean) * (x - mean));
    const double var = ss.value() / static_cast<double>(n - 1);
    return Estimate{mean, std::sqrt(std::max(var, 0.0) / static_cast<double>(n)), n};
}

std::pair<double, double> binomial_ci(double p_hat, std::int64_t n) {
    if (!(p_hat >= 0.0 && p_hat <= 1.0))
        throw std::invalid_argument("binomial_ci: p_hat outside [0,1]");
    if (n < 1) throw std::invalid_argument("binomial_ci: need n >= 1");
    const double half = 1.96 * std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n));
    return {std::max(0.0, p_hat - half), std::min(1.0, p_hat + half)};
}

std::vector<double> quantiles(std::vector<double> samples, std::span<const double> probs) {
    if (samples.empty()) throw std::invalid_argument("quantiles: no samples");
    std::sort(samples.begin(), samples.end());
    std::vector<double> out;
    out.reserve(probs.size());
    const std::size_t n = samples.size();
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantiles: prob outside [0,1]");
        const double h = p * static_cast<double>(n - 1);
        const std::size_t lo = static_cast<std::size_t>(h);
        const std::size_t hi = std::min(lo + 1, n - 1);
        const double frac = h - static_cast<double>(lo);
        out.push_back(samples[lo] + frac * (samples[hi] - samples[lo]));
    }
    return out;
}

std::vector<std::int64_t> build_time_grid(std::int64_t horizon, int n_linear, int n_geometric) {
    if (horizon < 1 || n_linear < 1 || horizon < n_linear || n_geometric < 0)
        throw std::invalid_argument("build_time_grid: need horizon >= n_linear >= 1, n_geometric >= 0");
    std::vector<std::int64_t> grid;
    grid.reserve(static_cast<std::size_t>(n_linear + n_geometric + 1));
    grid.push_back(0);
    for (int i = 1; i <= n_linear; ++i)
        grid.push_back(std::llround(static_cast<double>(i) * static_cast<double>(horizon) /
                                    static_cast<double>(n_linear)));
    for (int i = 1; i <= n_geometric; ++i) {
        const double v =
            std::pow(static_cast<double>(horizon), static_cast<double>(i) / n_geometric);
        grid.push_back(std::clamp<std::int64_t>(std::llround(v), 1, horizon));
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

int tune_geometric_count(std::int64_t horizon, int n_linear, int target_unique) {
    int best = 0;
    std::int64_t best_gap = std::numeric_limits<std::int64_t>::max();
    for (int ng = 0; ng <= 512; ++ng) {
        const auto size =
            static_cast<std::int64_t>(build_time_grid(horizon, n_linear, ng).size());
        const std::int64_t gap = std::llabs(size - target_unique);
        if (gap == 0) return ng;
        if (gap < best_gap) {
            best_gap = gap;
            best = ng;
        }
    }
    return best;
}

std::pair<int, int> tune_grid(std::int64_t horizon, int target_unique) {
    const int start = std::min<int>(target_unique - 1,
                                    static_cast<int>(std::llround(0.855 * target_unique)));
    for (int nl = start; nl >= std::max(1, target_unique / 2); --nl) {
        if (nl > horizon) continue;
        for (int ng = 0; ng <= 256; ++ng) {
            if (static_cast<int>(build_time_grid(horizon, nl, ng).size()) == target_unique)
                return {nl, ng};
        }
    }
    const int fallback =
        std::max(1, static_cast<int>(std::min<std::int64_t>(start, horizon)));
    return {fallback, tune_geometric_count(horizon, fallback, target_unique)};
}

std::uint64_t batch_seed(std::uint64_t master_seed, std::int64_t batch_index) {
    return splitmix64(master_seed +
                      0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(batch_index) + 1));
}

std::int64_t batch_count(const MonteCarloConfig& config) {
    if (config.n_paths < 1 || config.batch_size < 1 || config.horizon < 1)
        throw std::invalid_argument("monte carlo config: paths, batch and horizon must be >= 1");
    return (config.n_paths + config.batch_size - 1) / config.batch_size;
}

std::int64_t batch_paths(const MonteCarloConfig& config, std::int64_t batch_index) {
    const std::int64_t start = batch_index * config.batch_size;
    return std::min(config.batch_size, config.n_paths - start);
}

}  // namespace wait
