#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "dqe/core.hpp"
#include "dqe/graph.hpp"

namespace dqe {

// Order-statistic queries expressed as quantile targets.
struct SelectionQuery {
    enum class Kind { median, minimum, maximum, kth_smallest };

    Kind kind = Kind::median;
    int k = 0;             // kth_smallest only
    double epsilon = 0.5;  // offset keeping p off the 1/N grid
};

// Maps a query to its ratio p:
//   maximum      -> (N - eps)/N
//   minimum      -> (1 - eps)/N
//   kth_smallest -> (k - eps)/N
//   median       -> (ceil(N/2) - eps)/N for odd N, (N/2 - eps)/N for even N
//                   (even N targets the lower middle element)
// Always strictly inside (0,1) and off the 1/N grid for eps in (0,1).
double selection_to_p(const SelectionQuery& query, int node_count);

struct SelectionEstimate {
    double p = 0.0;
    double theta_oracle = 0.0;       // centralized quantile at the same p
    std::vector<double> omega;       // final per-node states
    double max_abs_error = 0.0;      // max_n |omega_n - theta_oracle|
};

SelectionEstimate estimate_selection(const Network& network,
                                     const MeasurementSet& data,
                                     const SelectionQuery& query,
                                     const StepSchedule& schedule,
                                     const NoiseModel& noise,
                                     std::int64_t budget, std::uint64_t seed);

enum class Tail { upper, lower };

struct OutlierReport {
    std::vector<bool> flags;           // flags[n]: node n holds an outlier
    double threshold_p = 0.0;
    Tail tail = Tail::upper;
    double cutoff_estimate = 0.0;      // network average of the cutoff states
    std::vector<double> cutoff_states; // per-node converged states
};

// Runs the estimator for theta_{threshold_p}; each node then compares its
// own measurement against its own converged state. Fully local decisions;
// no oracle is consulted.
OutlierReport flag_outliers(const Network& network, const MeasurementSet& data,
                            double threshold_p, Tail tail,
                            const StepSchedule& schedule,
                            const NoiseModel& noise, std::int64_t budget,
                            std::uint64_t seed);

// Percentage band for the trimmed mean, 0 < lower < upper < 100.
struct TrimSpec {
    double lower_percent = 10.0;
    double upper_percent = 90.0;
};

class DegenerateTrimError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
class NotConvergedError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrimmedMeanResult {
    std::vector<double> estimates;  // per-node numerator/denominator readout
    std::vector<bool> in_band;      // mask each node chose for itself
    double cutoff_low_p = 0.0;      // ratios used for the two cutoff runs
    double cutoff_high_p = 0.0;
    int band_size = 0;
};

// Masked average by ratio consensus over the full graph: two simultaneous
// average-consensus recursions v <- (I - eps_c*L) v on the masked values and
// on the mask itself, eps_c = 0.5/d_max, for `iterations` rounds. Nodes
// outside the mask still relay, so no subgraph connectivity is needed; each
// node's numerator/denominator ratio converges to the masked mean.
// Throws DegenerateTrimError when the mask is empty and NotConvergedError
// when a denominator is still below 1e-9 at readout.
std::vector<double> ratio_consensus_masked_mean(const Network& network,
                                                const std::vector<bool>& mask,
                                                const std::vector<double>& values,
                                                std::int64_t iterations);

// Three phases: estimate the two cutoff quantiles with two estimator runs,
// mask each node by its own converged cutoffs, then ratio consensus over
// the full graph. Cutoff ratios are (ceil(c*N) - eps)/N for c = a/100 and
// b/100, which targets the same order statistic as theta_c but stays off
// the 1/N grid.
TrimmedMeanResult trimmed_mean(const Network& network,
                               const MeasurementSet& data, const TrimSpec& trim,
                               const StepSchedule& schedule,
                               const NoiseModel& noise, std::int64_t budget,
                               std::int64_t consensus_budget,
                               std::uint64_t seed);

}  // namespace dqe
