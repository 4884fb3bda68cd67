#include "dqe/core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dqe {

namespace {

// u(omega - x) per the estimator's step function: 1 at the boundary.
inline double unit_step(double diff) { return diff >= 0.0 ? 1.0 : 0.0; }

void local_update_into(const std::vector<double>& omega,
                       const MeasurementSet& data, double p, double alpha_i,
                       std::vector<double>& psi) {
    const std::size_t n = omega.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double y = unit_step(omega[i] - data[static_cast<int>(i)]) - p;
        psi[i] = omega[i] - alpha_i * y;
    }
}

void averaging_step_into(const std::vector<double>& psi, const Network& network,
                         double eta_i, const NoiseModel& noise, Rng& rng,
                         std::vector<double>& out) {
    const int n = network.node_count();
    const bool noisy = noise.kind == NoiseModel::Kind::gaussian;
    const double sigma = noisy ? std::sqrt(noise.variance) : 0.0;
    for (int u = 0; u < n; ++u) {
        double disagreement = 0.0;
        for (int v : network.neighbors(u)) {
            double received = psi[static_cast<std::size_t>(v)];
            if (noisy) received += sigma * rng.normal();
            disagreement += psi[static_cast<std::size_t>(u)] - received;
        }
        out[static_cast<std::size_t>(u)] =
            psi[static_cast<std::size_t>(u)] - eta_i * disagreement;
    }
}

}  // namespace

MeasurementSet::MeasurementSet(std::vector<double> values)
    : values_(std::move(values)) {
    if (values_.size() < 2) {
        throw std::invalid_argument("MeasurementSet: need at least 2 values");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("MeasurementSet: values must be finite");
        }
    }
}

double StepSchedule::alpha_at(std::int64_t i) const {
    return alpha0 / std::pow(static_cast<double>(i) + 1.0, tau1);
}

double StepSchedule::eta_at(std::int64_t i) const {
    return eta0 / std::pow(static_cast<double>(i) + 1.0, tau2);
}

std::vector<std::string> validate_schedule(const StepSchedule& s) {
    std::vector<std::string> violations;
    if (!(s.tau1 <= 1.0)) violations.push_back("tau1 <= 1 fails");
    if (!(s.tau1 > s.tau2)) violations.push_back("tau1 > tau2 fails");
    if (!(s.tau2 > 0.5)) violations.push_back("tau2 > 0.5 fails");
    if (!(s.tau1 - s.tau2 < 0.5)) violations.push_back("tau1 - tau2 < 0.5 fails");
    if (!(s.alpha0 > 0.0)) violations.push_back("alpha0 > 0 fails");
    if (!(s.eta0 > 0.0)) violations.push_back("eta0 > 0 fails");
    return violations;
}

NoiseModel NoiseModel::gaussian(double variance) {
    if (variance < 0.0 || !std::isfinite(variance)) {
        throw std::invalid_argument("NoiseModel: variance must be finite, >= 0");
    }
    return {Kind::gaussian, variance};
}

double ecdf(double omega, const MeasurementSet& data) {
    int count = 0;
    for (double x : data.values()) {
        if (x <= omega) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(data.size());
}

double quantile_oracle(double p, const MeasurementSet& data) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("quantile_oracle: p must be in (0,1)");
    }
    const int n = data.size();
    // k-th smallest, 1-based, k = ceil(p*N)
    int k = static_cast<int>(std::ceil(p * static_cast<double>(n)));
    k = std::clamp(k, 1, n);
    std::vector<double> values = data.values();
    std::nth_element(values.begin(), values.begin() + (k - 1), values.end());
    return values[static_cast<std::size_t>(k - 1)];
}

double selection_p(int k, int node_count, double epsilon) {
    if (k < 1 || k > node_count) {
        throw std::domain_error("selection_p: k must be in [1, N]");
    }
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw std::domain_error("selection_p: epsilon must be in (0,1)");
    }
    return (static_cast<double>(k) - epsilon) / static_cast<double>(node_count);
}

QuantileTarget validate_target(double p, int node_count) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("validate_target: p must be in (0,1)");
    }
    QuantileTarget target;
    target.p = p;
    const double scaled = p * static_cast<double>(node_count);
    const double nearest = std::round(scaled);
    if (nearest >= 1.0 && std::abs(scaled - nearest) <= 1e-12 * node_count) {
        const int k = static_cast<int>(nearest);
        target.degenerate = true;
        target.warning =
            "degenerate target: p = " + std::to_string(k) + "/" +
            std::to_string(node_count) +
            " sits on a discontinuity of the ECDF; the estimate may settle "
            "anywhere in [x_(" +
            std::to_string(k) + "), x_(" + std::to_string(k + 1) + "))";
    }
    return target;
}

std::vector<double> local_update(const std::vector<double>& omega,
                                 const MeasurementSet& data, double p,
                                 double alpha_i) {
    if (omega.size() != static_cast<std::size_t>(data.size())) {
        throw std::invalid_argument("local_update: omega/data dimension mismatch");
    }
    std::vector<double> psi(omega.size());
    local_update_into(omega, data, p, alpha_i, psi);
    return psi;
}

std::vector<double> averaging_step(const std::vector<double>& psi,
                                   const Network& network, double eta_i,
                                   const NoiseModel& noise, Rng& rng) {
    if (psi.size() != static_cast<std::size_t>(network.node_count())) {
        throw std::invalid_argument(
            "averaging_step: psi/network dimension mismatch");
    }
    std::vector<double> out(psi.size());
    averaging_step_into(psi, network, eta_i, noise, rng, out);
    return out;
}

std::string averaging_stability_warning(const StepSchedule& schedule,
                                        const Network& network) {
    const double product = schedule.eta0 * network.max_degree();
    if (product >= 1.0) {
        return "eta0 * d_max = " + std::to_string(product) +
               " >= 1: early averaging steps may amplify disagreement until "
               "eta(i) decays below 1/d_max";
    }
    return {};
}

EstimatorRun::EstimatorRun(const Network& network, MeasurementSet data,
                           double p, StepSchedule schedule, NoiseModel noise,
                           std::uint64_t seed)
    : network_(&network),
      data_(std::move(data)),
      p_(p),
      schedule_(schedule),
      noise_(noise),
      omega_(data_.values()),  // omega(0) = x
      psi_(omega_.size()),
      rng_(seed) {
    if (data_.size() != network.node_count()) {
        throw std::invalid_argument("EstimatorRun: data/network size mismatch");
    }
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("EstimatorRun: p must be in (0,1)");
    }
}

void EstimatorRun::step() {
    local_update_into(omega_, data_, p_, schedule_.alpha_at(iteration_), psi_);
    averaging_step_into(psi_, *network_, schedule_.eta_at(iteration_), noise_,
                        rng_, omega_);
    ++iteration_;
}

void EstimatorRun::run_to(std::int64_t iterations) {
    run_to(iterations, SnapshotCallback{});
}

void EstimatorRun::run_to(std::int64_t iterations,
                          const SnapshotCallback& on_step) {
    if (iterations < 1) {
        throw std::invalid_argument("run_to: iterations must be >= 1");
    }
    for (std::int64_t i = 0; i < iterations; ++i) {
        step();
        if (on_step) on_step(iteration_, omega_);
    }
}

}  // namespace dqe
