#pragma once

#include <cstdint>
#include <vector>

#include "dqe/core.hpp"
#include "dqe/graph.hpp"

namespace dqe {

// (1/N) * ||omega - theta*1||^2
double squared_error(const std::vector<double>& omega, double theta);

// Arithmetic mean of the state vector.
double network_average(const std::vector<double>& omega);

enum class MetricKind { ensemble_mse, squared_error };

struct ConvergenceTrace {
    std::vector<std::int64_t> iterations;  // strictly increasing
    std::vector<double> values;            // metric at each recorded iteration
    MetricKind kind = MetricKind::squared_error;
    double theta = 0.0;
};

// Recording grids. Traces span decades, so the default is log-spaced;
// exact powers of ten are always present. Both grids end at
// max_iterations.
std::vector<std::int64_t> log_spaced_iterations(std::int64_t max_iterations,
                                                int points_per_decade = 20);
std::vector<std::int64_t> stride_iterations(std::int64_t max_iterations,
                                            std::int64_t stride);

struct EnsembleResult {
    ConvergenceTrace trace;  // ensemble-averaged MSE
    double theta = 0.0;
    // |mean over realizations of network_average(final omega) - theta|
    double final_bias = 0.0;
    // Per-node ensemble mean of the final state (secondary bias diagnostic).
    std::vector<double> mean_final_state;
};

// Runs `realizations` independent estimator runs that differ only in their
// noise streams (realization r is seeded from (master_seed, r)), and
// averages squared_error over them at each recorded iteration -- the sample
// estimate of (1/N) E||omega(i) - theta*1||^2.
//
// Realizations may be distributed over `workers` threads (0 = hardware
// concurrency); results are aggregated in realization order after the join,
// so the outcome is identical for any parallelism degree.
EnsembleResult run_ensemble(const Network& network, const MeasurementSet& data,
                            double p, const StepSchedule& schedule,
                            const NoiseModel& noise, int realizations,
                            std::uint64_t master_seed,
                            std::int64_t max_iterations,
                            const std::vector<std::int64_t>& record_iterations,
                            int workers = 0);

}  // namespace dqe
