#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "dqe/metrics.hpp"

using dqe::MeasurementSet;
using dqe::Network;
using dqe::NoiseModel;
using dqe::StepSchedule;

namespace {

MeasurementSet uniform_grid(int n) {
    std::vector<double> values(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        values[static_cast<std::size_t>(i)] = static_cast<double>(i) / n;
    }
    return MeasurementSet(std::move(values));
}

// Pairwise summation, an independent order of operations.
double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return v[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

}  // namespace

TEST_CASE("squared error") {
    CHECK(dqe::squared_error({0.7, 0.7, 0.7}, 0.7) == 0.0);
    CHECK(dqe::squared_error({1.5, -0.5}, 0.5) == 1.0);

    // grid against theta = 0.98: closed-form arithmetic series vs loop
    const auto grid = uniform_grid(50);
    double expected = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double d = static_cast<double>(i) / 50.0 - 0.98;
        expected += d * d;
    }
    expected /= 50.0;
    CHECK(dqe::squared_error(grid.values(), 0.98) ==
          doctest::Approx(expected).epsilon(1e-15));
    // zero iff omega == theta*1
    CHECK(dqe::squared_error({0.7, 0.7 + 1e-12}, 0.7) > 0.0);
}

TEST_CASE("network average") {
    CHECK(dqe::network_average({2.5, 2.5, 2.5}) == 2.5);
    CHECK(dqe::network_average({0.0, 1.0}) == 0.5);

    dqe::Rng rng(21);
    std::vector<double> v(10);
    for (auto& x : v) x = rng.uniform(-3.0, 3.0);
    const double oracle = pairwise_sum(v, 0, v.size()) / 10.0;
    CHECK(dqe::network_average(v) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("recording grids") {
    const auto log_grid = dqe::log_spaced_iterations(10000, 20);
    CHECK(log_grid.front() == 1);
    CHECK(log_grid.back() == 10000);
    for (std::size_t i = 1; i < log_grid.size(); ++i) {
        CHECK(log_grid[i] > log_grid[i - 1]);
    }
    // exact decades always present (the acceptance comparisons key on them)
    for (std::int64_t decade : {1LL, 10LL, 100LL, 1000LL, 10000LL}) {
        CHECK(std::find(log_grid.begin(), log_grid.end(), decade) != log_grid.end());
    }

    const auto strided = dqe::stride_iterations(1050, 100);
    CHECK(strided.front() == 100);
    CHECK(strided.back() == 1050);

    CHECK_THROWS_AS(dqe::log_spaced_iterations(0), std::invalid_argument);
    CHECK_THROWS_AS(dqe::stride_iterations(10, 0), std::invalid_argument);
}

TEST_CASE("ensemble runner") {
    const auto net = Network::random_geometric(16, 0.45, 9);
    const auto data = uniform_grid(16);
    const StepSchedule schedule{1.0, 1.0, 0.5 / net.max_degree(), 0.505};
    const double p = dqe::selection_p(14, 16);  // theta = x_(14)
    const auto grid = dqe::log_spaced_iterations(400, 10);

    SUBCASE("noiseless ensemble equals the single run pointwise") {
        const auto single = dqe::run_ensemble(net, data, p, schedule,
                                              NoiseModel::none(), 1, 77, 400,
                                              grid, 1);
        const auto ensemble = dqe::run_ensemble(net, data, p, schedule,
                                                NoiseModel::none(), 5, 77, 400,
                                                grid, 2);
        REQUIRE(single.trace.values.size() == ensemble.trace.values.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(ensemble.trace.values[i] ==
                  doctest::Approx(single.trace.values[i]).epsilon(1e-12));
        }
        CHECK(ensemble.theta == dqe::quantile_oracle(p, data));
    }

    SUBCASE("parallelism degree does not change the result") {
        const auto noise = NoiseModel::gaussian(0.04);
        const auto short_grid = dqe::log_spaced_iterations(300, 10);
        const auto serial = dqe::run_ensemble(net, data, p, schedule, noise, 6,
                                              123, 300, short_grid, 1);
        const auto threaded = dqe::run_ensemble(net, data, p, schedule, noise, 6,
                                                123, 300, short_grid, 3);
        CHECK(serial.trace.values == threaded.trace.values);
        CHECK(serial.mean_final_state == threaded.mean_final_state);
        CHECK(serial.final_bias == threaded.final_bias);
    }

    SUBCASE("rerun with the same master seed is bitwise identical") {
        const auto noise = NoiseModel::gaussian(0.09);
        const auto short_grid = dqe::log_spaced_iterations(200, 10);
        const auto a = dqe::run_ensemble(net, data, p, schedule, noise, 4, 55,
                                         200, short_grid, 2);
        const auto b = dqe::run_ensemble(net, data, p, schedule, noise, 4, 55,
                                         200, short_grid, 2);
        CHECK(a.trace.values == b.trace.values);
        CHECK(a.mean_final_state == b.mean_final_state);
    }

    SUBCASE("argument validation") {
        CHECK_THROWS_AS(dqe::run_ensemble(net, data, p, schedule,
                                          NoiseModel::none(), 0, 1, 100, grid, 1),
                        std::invalid_argument);
        CHECK_THROWS_AS(dqe::run_ensemble(net, data, p, schedule,
                                          NoiseModel::none(), 2, 1, 100,
                                          {50, 50}, 1),
                        std::invalid_argument);
        CHECK_THROWS_AS(dqe::run_ensemble(net, data, p, schedule,
                                          NoiseModel::none(), 2, 1, 100,
                                          {50, 200}, 1),
                        std::invalid_argument);
    }
}
