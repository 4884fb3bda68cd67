#include "dqe/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace dqe {

double squared_error(const std::vector<double>& omega, double theta) {
    double sum = 0.0;
    for (double w : omega) {
        const double d = w - theta;
        sum += d * d;
    }
    return sum / static_cast<double>(omega.size());
}

double network_average(const std::vector<double>& omega) {
    double sum = 0.0;
    for (double w : omega) sum += w;
    return sum / static_cast<double>(omega.size());
}

std::vector<std::int64_t> log_spaced_iterations(std::int64_t max_iterations,
                                                int points_per_decade) {
    if (max_iterations < 1) {
        throw std::invalid_argument("log_spaced_iterations: max_iterations >= 1");
    }
    if (points_per_decade < 1) {
        throw std::invalid_argument("log_spaced_iterations: points_per_decade >= 1");
    }
    std::vector<std::int64_t> points;
    for (int k = 0;; ++k) {
        const double value =
            std::pow(10.0, static_cast<double>(k) / points_per_decade);
        const auto i = static_cast<std::int64_t>(std::llround(value));
        if (i > max_iterations) break;
        if (points.empty() || i > points.back()) points.push_back(i);
    }
    if (points.empty() || points.back() != max_iterations) {
        points.push_back(max_iterations);
    }
    return points;
}

std::vector<std::int64_t> stride_iterations(std::int64_t max_iterations,
                                            std::int64_t stride) {
    if (max_iterations < 1 || stride < 1) {
        throw std::invalid_argument("stride_iterations: bad arguments");
    }
    std::vector<std::int64_t> points;
    for (std::int64_t i = stride; i <= max_iterations; i += stride) {
        points.push_back(i);
    }
    if (points.empty() || points.back() != max_iterations) {
        points.push_back(max_iterations);
    }
    return points;
}

EnsembleResult run_ensemble(const Network& network, const MeasurementSet& data,
                            double p, const StepSchedule& schedule,
                            const NoiseModel& noise, int realizations,
                            std::uint64_t master_seed,
                            std::int64_t max_iterations,
                            const std::vector<std::int64_t>& record_iterations,
                            int workers) {
    if (realizations < 1) {
        throw std::invalid_argument("run_ensemble: realizations must be >= 1");
    }
    if (max_iterations < 1) {
        throw std::invalid_argument("run_ensemble: max_iterations must be >= 1");
    }
    if (max_iterations >
        std::numeric_limits<std::int64_t>::max() / realizations) {
        throw std::invalid_argument("run_ensemble: realizations * max_iterations overflows");
    }
    for (std::size_t i = 0; i + 1 < record_iterations.size(); ++i) {
        if (record_iterations[i] >= record_iterations[i + 1]) {
            throw std::invalid_argument(
                "run_ensemble: record iterations must be strictly increasing");
        }
    }
    if (!record_iterations.empty() &&
        (record_iterations.front() < 1 ||
         record_iterations.back() > max_iterations)) {
        throw std::invalid_argument(
            "run_ensemble: record iterations out of [1, max_iterations]");
    }

    const double theta = quantile_oracle(p, data);
    const int n = network.node_count();
    const std::size_t n_records = record_iterations.size();

    // Per-realization results, filled by whichever worker picks the index.
    std::vector<std::vector<double>> errors(
        static_cast<std::size_t>(realizations));
    std::vector<std::vector<double>> finals(
        static_cast<std::size_t>(realizations));

    auto run_one = [&](int r) {
        EstimatorRun run(network, data, p, schedule, noise,
                         derive_seed(master_seed, StreamKind::run,
                                     static_cast<std::uint64_t>(r)));
        auto& err = errors[static_cast<std::size_t>(r)];
        err.resize(n_records);
        std::size_t next = 0;
        for (std::int64_t i = 1; i <= max_iterations; ++i) {
            run.step();
            if (next < n_records && i == record_iterations[next]) {
                err[next] = squared_error(run.omega(), theta);
                ++next;
            }
        }
        finals[static_cast<std::size_t>(r)] = run.omega();
    };

    int thread_count = workers > 0
                           ? workers
                           : static_cast<int>(std::thread::hardware_concurrency());
    if (thread_count < 1) thread_count = 1;
    thread_count = std::min(thread_count, realizations);

    if (thread_count == 1) {
        for (int r = 0; r < realizations; ++r) run_one(r);
    } else {
        std::atomic<int> next_realization{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(thread_count));
        for (int t = 0; t < thread_count; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    const int r = next_realization.fetch_add(1);
                    if (r >= realizations) return;
                    run_one(r);
                }
            });
        }
        for (auto& worker : pool) worker.join();
    }

    // Aggregate in realization order; independent of scheduling above.
    EnsembleResult result;
    result.theta = theta;
    result.trace.kind = MetricKind::ensemble_mse;
    result.trace.theta = theta;
    result.trace.iterations = record_iterations;
    result.trace.values.assign(n_records, 0.0);
    result.mean_final_state.assign(static_cast<std::size_t>(n), 0.0);
    double mean_of_averages = 0.0;
    for (int r = 0; r < realizations; ++r) {
        for (std::size_t j = 0; j < n_records; ++j) {
            result.trace.values[j] += errors[static_cast<std::size_t>(r)][j];
        }
        const auto& final_state = finals[static_cast<std::size_t>(r)];
        for (int i = 0; i < n; ++i) {
            result.mean_final_state[static_cast<std::size_t>(i)] +=
                final_state[static_cast<std::size_t>(i)];
        }
        mean_of_averages += network_average(final_state);
    }
    const double inv_r = 1.0 / static_cast<double>(realizations);
    for (auto& v : result.trace.values) v *= inv_r;
    for (auto& v : result.mean_final_state) v *= inv_r;
    result.final_bias = std::abs(mean_of_averages * inv_r - theta);
    return result;
}

}  // namespace dqe
