#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dqe/graph.hpp"
#include "dqe/rng.hpp"

namespace dqe {

// One scalar measurement per node. Node n owns values[n]; no ordering is
// imposed on callers.
class MeasurementSet {
public:
    explicit MeasurementSet(std::vector<double> values);

    int size() const { return static_cast<int>(values_.size()); }
    double operator[](int n) const { return values_[static_cast<std::size_t>(n)]; }
    const std::vector<double>& values() const { return values_; }

private:
    std::vector<double> values_;
};

// Decay parameters of the two step-size sequences,
//   alpha(i) = alpha0 / (i+1)^tau1   (local update)
//   eta(i)   = eta0   / (i+1)^tau2   (averaging)
// The averaging sequence must decay slower than the local one for the
// mixed-time-scale recursion to converge; see validate_schedule.
struct StepSchedule {
    double alpha0 = 1.0;
    double tau1 = 1.0;
    double eta0 = 0.1;
    double tau2 = 0.505;

    double alpha_at(std::int64_t i) const;
    double eta_at(std::int64_t i) const;
};

// Checks 1 >= tau1 > tau2 > 0.5, tau1 - tau2 < 0.5, alpha0 > 0, eta0 > 0.
// For these power-law forms the inequalities imply the persistence
// conditions (divergent sums, convergent squared sums), so no numerical
// series check is needed. Returns every violated clause; empty means ok.
std::vector<std::string> validate_schedule(const StepSchedule& schedule);

// Zero-mean i.i.d. perturbation applied per directed link per iteration.
struct NoiseModel {
    enum class Kind { none, gaussian };

    Kind kind = Kind::none;
    double variance = 0.0;

    static NoiseModel none() { return {}; }
    static NoiseModel gaussian(double variance);
};

// Empirical CDF of the measurement set at omega. A data point equal to
// omega counts: the underlying step function is 1 at 0.
double ecdf(double omega, const MeasurementSet& data);

// Centralized sample quantile: the smallest data value whose ECDF reaches
// p, i.e. the ceil(p*N)-th smallest element. Ground truth for every
// distributed run. Throws std::domain_error unless 0 < p < 1.
double quantile_oracle(double p, const MeasurementSet& data);

// p = (k - epsilon)/N: the off-grid ratio whose quantile is the k-th
// smallest element.
double selection_p(int k, int node_count, double epsilon = 0.5);

struct QuantileTarget {
    double p = 0.0;
    bool degenerate = false;  // p on the 1/N grid
    std::string warning;      // set when degenerate
};

// Accepts any p in (0,1). When p is within 1e-12 of a multiple of 1/N the
// target is degenerate: the estimate may settle anywhere in [x_k, x_{k+1}),
// and the returned warning says so. Throws std::domain_error otherwise.
QuantileTarget validate_target(double p, int node_count);

// Local update: psi_n = omega_n - alpha * [u(omega_n - x_n) - p], with
// u(0) = 1. Every component of the bracket is -p or 1-p.
std::vector<double> local_update(const std::vector<double>& omega,
                                 const MeasurementSet& data, double p,
                                 double alpha_i);

// Averaging step:
//   omega_n' = psi_n - eta * sum_{l in N_n} [psi_n - (psi_l + xi_nl)]
// with one independent noise draw per directed link (xi_nl and xi_ln are
// distinct draws). Draw order is fixed: nodes ascending, neighbors
// ascending. With no noise this is (I - eta*L) psi.
std::vector<double> averaging_step(const std::vector<double>& psi,
                                   const Network& network, double eta_i,
                                   const NoiseModel& noise, Rng& rng);

// Non-fatal heads-up when eta(0)*d_max >= 1: the first averaging steps can
// amplify disagreement before the decaying eta stabilizes them.
// Empty when the schedule is comfortably inside the stability region.
std::string averaging_stability_warning(const StepSchedule& schedule,
                                        const Network& network);

// One evolving estimation run: state vector omega(i), its RNG stream and
// iteration counter. omega(0) = x. Each step() applies the local update
// with alpha(i), the averaging step with eta(i), and increments i.
// Deterministic given the seed. Exclusively owned while stepping; distinct
// runs share only the immutable network and data.
class EstimatorRun {
public:
    EstimatorRun(const Network& network, MeasurementSet data, double p,
                 StepSchedule schedule, NoiseModel noise, std::uint64_t seed);

    void step();

    // Applies step() exactly `iterations` more times. The callback, when
    // given, observes (iteration, omega) after each step.
    using SnapshotCallback =
        std::function<void(std::int64_t, const std::vector<double>&)>;
    void run_to(std::int64_t iterations);
    void run_to(std::int64_t iterations, const SnapshotCallback& on_step);

    const std::vector<double>& omega() const { return omega_; }
    std::int64_t iteration() const { return iteration_; }
    double p() const { return p_; }
    const MeasurementSet& data() const { return data_; }
    const Network& network() const { return *network_; }

private:
    const Network* network_;
    MeasurementSet data_;
    double p_;
    StepSchedule schedule_;
    NoiseModel noise_;
    std::vector<double> omega_;
    std::vector<double> psi_;  // scratch
    std::int64_t iteration_ = 0;
    Rng rng_;
};

}  // namespace dqe
