#include "wait/gaussian.hpp"

#include <random>
#include <stdexcept>

namespace wait {
namespace {

void check_bed(const GaussianBed& bed) {
    if (!(bed.mu > 0.0)) throw std::invalid_argument("gaussian bed: mu must be positive");
}

void check_grid(std::span<const std::int64_t> grid, std::int64_t horizon) {
    if (grid.empty()) throw std::invalid_argument("simulate: time grid must be nonempty");
    if (grid.front() != 0) throw std::invalid_argument("simulate: time grid must start at 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1])
            throw std::invalid_argument("simulate: time grid must be strictly ascending");
    if (grid.back() > horizon)
        throw std::invalid_argument("simulate: time grid exceeds the horizon");
}

void check_thresholds(std::span<const double> thresholds) {
    if (thresholds.empty()) throw std::invalid_argument("first passage: threshold list is empty");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > 0.0))
            throw std::invalid_argument("first passage: thresholds must be positive");
        if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
            throw std::invalid_argument("first passage: thresholds must be ascending");
    }
}

}  // namespace

double kl_rate(double mu) {
    if (!(mu > 0.0)) throw std::invalid_argument("kl_rate: mu must be positive");
    return 0.5 * mu * mu;
}

RunningMaxBatch simulate_running_max(const GaussianBed& bed, std::int64_t n_paths,
                                     std::int64_t horizon, std::span<const std::int64_t> grid,
                                     std::uint64_t seed) {
    check_bed(bed);
    if (n_paths < 1) throw std::invalid_argument("simulate: need at least one path");
    if (horizon < 1) throw std::invalid_argument("simulate: horizon must be at least 1");
    check_grid(grid, horizon);

    RunningMaxBatch out;
    out.grid.assign(grid.begin(), grid.end());
    out.running_max = Matrix<double>(static_cast<std::size_t>(n_paths), grid.size());
    out.seed = seed;

    std::mt19937_64 engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double mu = bed.mu;
    const double shift = (bed.hypothesis == Hypothesis::Alternative ? 0.5 : -0.5) * mu * mu;
    const std::int64_t t_end = grid.back();

    for (std::int64_t path = 0; path < n_paths; ++path) {
        auto row = out.running_max.row(static_cast<std::size_t>(path));
        double score = 0.0;
        double high = 0.0;
        row[0] = 0.0;
        std::size_t gi = 1;
        for (std::int64_t t = 1; t <= t_end; ++t) {
            score += mu * normal(engine) + shift;
            if (score > high) high = score;
            if (gi < row.size() && t == out.grid[gi]) row[gi++] = high;
        }
    }
    return out;
}

std::vector<std::int64_t> first_passage_indices(std::span<const double> running_max,
                                                std::span<const double> thresholds) {
    check_thresholds(thresholds);
    std::vector<std::int64_t> tau(thresholds.size(), kNever);
    std::size_t j = 0;
    for (std::size_t t = 0; t < running_max.size() && j < thresholds.size(); ++t)
        while (j < thresholds.size() && running_max[t] >= thresholds[j])
            tau[j++] = static_cast<std::int64_t>(t);
    return tau;
}

Matrix<std::int64_t> first_passage_times(const RunningMaxBatch& batch,
                                         std::span<const double> thresholds) {
    check_thresholds(thresholds);
    Matrix<std::int64_t> tau(batch.n_paths(), thresholds.size(), kNever);
    for (std::size_t i = 0; i < batch.n_paths(); ++i) {
        const auto row = batch.running_max.row(i);
        std::size_t j = 0;
        for (std::size_t g = 0; g < row.size() && j < thresholds.size(); ++g)
            while (j < thresholds.size() && row[g] >= thresholds[j])
                tau(i, j++) = batch.grid[g];
    }
    return tau;
}

Matrix<std::int64_t> simulate_first_passage(const GaussianBed& bed, std::int64_t n_paths,
                                            std::int64_t horizon,
                                            std::span<const double> thresholds,
                                            std::uint64_t seed) {
    check_bed(bed);
    if (n_paths < 1) throw std::invalid_argument("simulate: need at least one path");
    if (horizon < 1) throw std::invalid_argument("simulate: horizon must be at least 1");
    check_thresholds(thresholds);

    Matrix<std::int64_t> tau(static_cast<std::size_t>(n_paths), thresholds.size(), kNever);
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double mu = bed.mu;
    const double shift = (bed.hypothesis == Hypothesis::Alternative ? 0.5 : -0.5) * mu * mu;
    const std::size_t m = thresholds.size();

    for (std::int64_t path = 0; path < n_paths; ++path) {
        double score = 0.0;
        double high = 0.0;
        std::size_t j = 0;
        for (std::int64_t t = 1; t <= horizon; ++t) {
            score += mu * normal(engine) + shift;
            if (score > high) {
                high = score;
                while (j < m && high >= thresholds[j])
                    tau(static_cast<std::size_t>(path), j++) = t;
            }
        }
    }
    return tau;
}

}  // namespace wait
