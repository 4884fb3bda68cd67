#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "dqe/apps.hpp"
#include "dqe/core.hpp"
#include "dqe/graph.hpp"
#include "dqe/metrics.hpp"

namespace dqe {

// Config file problem; carries the offending line when known.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what
                                      : what),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

struct TopologySpec {
    enum class Kind { random_geometric, erdos_renyi, edge_list };
    Kind kind = Kind::random_geometric;
    int nodes = 0;
    double radius = 0.0;
    double edge_probability = 0.0;
    std::string path;
};

struct DataSpec {
    enum class Kind { uniform_grid, lognormal, file };
    Kind kind = Kind::uniform_grid;
    double mu = 0.0;        // lognormal: ln X ~ N(mu, sigma_sq)
    double sigma_sq = 0.25;
    std::string path;
};

struct TargetSpec {
    enum class Kind { quantile, selection, trim };
    Kind kind = Kind::quantile;
    double p = 0.0;
    SelectionQuery selection;
    bool median_midpoint = false;  // even-N median: also estimate the upper
                                   // middle element and report the midpoint
    TrimSpec trim;
    Tail tail = Tail::upper;  // outliers subcommand
};

struct RunSpec {
    enum class Record { log, stride };
    std::int64_t iterations = 0;
    Record record = Record::log;
    std::int64_t stride = 0;
    int ensemble = 1;
    std::uint64_t master_seed = 0;
    int workers = 0;  // 0 = hardware concurrency; execution detail, not
                      // part of the config digest
    std::int64_t consensus_iterations = 2000;  // trim phase 3
};

struct OutputSpec {
    std::string directory = ".";
    std::string prefix;
};

struct ExperimentConfig {
    TopologySpec topology;
    DataSpec data;
    TargetSpec target;
    StepSchedule schedule;
    bool eta0_auto = false;  // eta0 = 0.5/d_max, filled in after the
                             // topology is built
    NoiseModel noise;
    RunSpec run;
    OutputSpec output;
};

// Parsed, validated and fully resolved experiment: network built, data
// generated, auto fields expanded.
struct ResolvedExperiment {
    ExperimentConfig config;
    Network network;
    MeasurementSet data;
    double p = 0.0;  // resolved target ratio (quantile/selection targets)
    std::uint64_t config_digest = 0;
    std::vector<std::string> warnings;
};

// Flat key=value format with [section] headers; '#' starts a comment.
// Parse errors carry line context; validation reports every violated
// clause at once.
ExperimentConfig parse_config(std::istream& in);
ResolvedExperiment load_config(const std::string& path);

// Resolution split out so a parsed config can be adjusted (seed override)
// before the expensive part runs.
ResolvedExperiment resolve(ExperimentConfig config);

// uniform_grid -> {0, 1/N, ..., (N-1)/N}; lognormal -> exp of N normal
// draws; file -> one value per line.
MeasurementSet generate_data(const DataSpec& spec, int node_count, Rng& rng);

struct RunSummary {
    double theta_oracle = 0.0;
    double final_max_abs_error = 0.0;
    double final_bias = 0.0;
    std::int64_t iterations = 0;
    double wall_time_seconds = 0.0;  // only non-deterministic output field
    std::uint64_t config_digest = 0;
};

// Runs the configured experiment (single or ensemble) and writes
//   <prefix>trace.csv         iteration,metric
//   <prefix>states_final.csv  node,x,omega_final
//   <prefix>summary.txt       key=value lines
// into the output directory. Output bytes depend only on the resolved
// config (wall_time in summary.txt aside). The directory is probed for
// writability before any computation; partial outputs are removed on error.
RunSummary run_experiment(const ResolvedExperiment& experiment);

// Record grid implied by the run spec.
std::vector<std::int64_t> record_grid(const RunSpec& run);

}  // namespace dqe
