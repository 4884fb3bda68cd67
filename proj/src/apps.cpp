#include "dqe/apps.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dqe {

double selection_to_p(const SelectionQuery& query, int node_count) {
    if (node_count < 2) {
        throw std::domain_error("selection_to_p: need at least 2 nodes");
    }
    const double eps = query.epsilon;
    if (!(eps > 0.0 && eps < 1.0)) {
        throw std::domain_error("selection_to_p: epsilon must be in (0,1)");
    }
    switch (query.kind) {
        case SelectionQuery::Kind::maximum:
            return selection_p(node_count, node_count, eps);
        case SelectionQuery::Kind::minimum:
            return selection_p(1, node_count, eps);
        case SelectionQuery::Kind::kth_smallest:
            return selection_p(query.k, node_count, eps);
        case SelectionQuery::Kind::median: {
            const int k = (node_count % 2 == 1) ? (node_count + 1) / 2
                                                : node_count / 2;
            return selection_p(k, node_count, eps);
        }
    }
    throw std::domain_error("selection_to_p: unknown query kind");
}

SelectionEstimate estimate_selection(const Network& network,
                                     const MeasurementSet& data,
                                     const SelectionQuery& query,
                                     const StepSchedule& schedule,
                                     const NoiseModel& noise,
                                     std::int64_t budget, std::uint64_t seed) {
    SelectionEstimate estimate;
    estimate.p = selection_to_p(query, network.node_count());
    estimate.theta_oracle = quantile_oracle(estimate.p, data);
    EstimatorRun run(network, data, estimate.p, schedule, noise, seed);
    run.run_to(budget);
    estimate.omega = run.omega();
    estimate.max_abs_error = 0.0;
    for (double w : estimate.omega) {
        estimate.max_abs_error =
            std::max(estimate.max_abs_error, std::abs(w - estimate.theta_oracle));
    }
    return estimate;
}

OutlierReport flag_outliers(const Network& network, const MeasurementSet& data,
                            double threshold_p, Tail tail,
                            const StepSchedule& schedule,
                            const NoiseModel& noise, std::int64_t budget,
                            std::uint64_t seed) {
    EstimatorRun run(network, data, threshold_p, schedule, noise, seed);
    run.run_to(budget);

    OutlierReport report;
    report.threshold_p = threshold_p;
    report.tail = tail;
    report.cutoff_states = run.omega();
    double sum = 0.0;
    for (double w : report.cutoff_states) sum += w;
    report.cutoff_estimate = sum / static_cast<double>(data.size());
    report.flags.resize(static_cast<std::size_t>(data.size()));
    for (int n = 0; n < data.size(); ++n) {
        const double own_cutoff = report.cutoff_states[static_cast<std::size_t>(n)];
        report.flags[static_cast<std::size_t>(n)] =
            tail == Tail::upper ? data[n] > own_cutoff : data[n] < own_cutoff;
    }
    return report;
}

std::vector<double> ratio_consensus_masked_mean(const Network& network,
                                                const std::vector<bool>& mask,
                                                const std::vector<double>& values,
                                                std::int64_t iterations) {
    const int n = network.node_count();
    if (mask.size() != static_cast<std::size_t>(n) ||
        values.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("ratio_consensus: dimension mismatch");
    }
    if (std::none_of(mask.begin(), mask.end(), [](bool m) { return m; })) {
        throw DegenerateTrimError("ratio_consensus: empty mask, no node in band");
    }
    std::vector<double> numerator(static_cast<std::size_t>(n), 0.0);
    std::vector<double> denominator(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        if (mask[static_cast<std::size_t>(i)]) {
            numerator[static_cast<std::size_t>(i)] = values[static_cast<std::size_t>(i)];
            denominator[static_cast<std::size_t>(i)] = 1.0;
        }
    }

    const double eps_c = 0.5 / static_cast<double>(network.max_degree());
    std::vector<double> next(static_cast<std::size_t>(n));
    auto consensus_round = [&](std::vector<double>& v) {
        for (int u = 0; u < n; ++u) {
            double disagreement = 0.0;
            for (int w : network.neighbors(u)) {
                disagreement += v[static_cast<std::size_t>(u)] -
                                v[static_cast<std::size_t>(w)];
            }
            next[static_cast<std::size_t>(u)] =
                v[static_cast<std::size_t>(u)] - eps_c * disagreement;
        }
        v.swap(next);
    };
    for (std::int64_t i = 0; i < iterations; ++i) {
        consensus_round(numerator);
        consensus_round(denominator);
    }

    std::vector<double> estimates(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double den = denominator[static_cast<std::size_t>(i)];
        if (den < 1e-9) {
            throw NotConvergedError(
                "ratio_consensus: denominator below 1e-9 at node " +
                std::to_string(i) + " after " + std::to_string(iterations) +
                " rounds");
        }
        estimates[static_cast<std::size_t>(i)] =
            numerator[static_cast<std::size_t>(i)] / den;
    }
    return estimates;
}

namespace {

// Ratio for one trim cutoff: targets the order statistic x_(ceil(c*N)) but
// off the 1/N grid, so the estimator settles at the cutoff value itself
// rather than drifting inside [x_k, x_{k+1}).
double cutoff_p(double c, int node_count, double eps = 0.5) {
    const double scaled = c * static_cast<double>(node_count);
    int k = static_cast<int>(std::ceil(scaled - 1e-9));
    k = std::clamp(k, 1, node_count);
    return selection_p(k, node_count, eps);
}

}  // namespace

TrimmedMeanResult trimmed_mean(const Network& network,
                               const MeasurementSet& data, const TrimSpec& trim,
                               const StepSchedule& schedule,
                               const NoiseModel& noise, std::int64_t budget,
                               std::int64_t consensus_budget,
                               std::uint64_t seed) {
    if (!(trim.lower_percent > 0.0 && trim.lower_percent < trim.upper_percent &&
          trim.upper_percent < 100.0)) {
        throw std::domain_error("trimmed_mean: need 0 < a < b < 100");
    }
    const int n = network.node_count();
    TrimmedMeanResult result;
    result.cutoff_low_p = cutoff_p(trim.lower_percent / 100.0, n);
    result.cutoff_high_p = cutoff_p(trim.upper_percent / 100.0, n);

    EstimatorRun low_run(network, data, result.cutoff_low_p, schedule, noise,
                         derive_seed(seed, StreamKind::run, 0));
    low_run.run_to(budget);
    EstimatorRun high_run(network, data, result.cutoff_high_p, schedule, noise,
                          derive_seed(seed, StreamKind::run, 1));
    high_run.run_to(budget);

    result.in_band.resize(static_cast<std::size_t>(n));
    result.band_size = 0;
    for (int i = 0; i < n; ++i) {
        const bool inside =
            low_run.omega()[static_cast<std::size_t>(i)] <= data[i] &&
            data[i] <= high_run.omega()[static_cast<std::size_t>(i)];
        result.in_band[static_cast<std::size_t>(i)] = inside;
        if (inside) ++result.band_size;
    }

    result.estimates = ratio_consensus_masked_mean(network, result.in_band,
                                                   data.values(),
                                                   consensus_budget);
    return result;
}

}  // namespace dqe
