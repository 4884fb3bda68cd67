// Experiment driver for consensus-based distributed quantile estimation.
//
// Subcommands:
//   run        single or ensemble estimation per config, CSV outputs
//   select     median / minimum / maximum / k-th smallest
//   trim       trimmed mean via two cutoff runs + ratio consensus
//   outliers   node-local outlier flags against a quantile cutoff
//   graph-info print N, edges, d_max, lambda2, connectivity
//   validate   parse and validate a config, run nothing
//
// Exit codes: 0 ok, 1 validation failure, 2 runtime error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "dqe/experiment.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::string out_override;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file")
        ->required();
    cmd->add_option("--seed", args.seed_override,
                    "override [run] master_seed");
    cmd->add_option("--out", args.out_override, "override [output] directory");
    cmd->add_flag("--quiet", args.quiet, "suppress informational output");
}

dqe::ResolvedExperiment load(const CommonArgs& args) {
    std::ifstream in(args.config_path);
    if (!in) {
        throw dqe::ConfigError("cannot open config file " + args.config_path);
    }
    dqe::ExperimentConfig cfg = dqe::parse_config(in);
    if (args.seed_override) cfg.run.master_seed = *args.seed_override;
    if (!args.out_override.empty()) cfg.output.directory = args.out_override;
    dqe::ResolvedExperiment experiment = dqe::resolve(std::move(cfg));
    for (const auto& warning : experiment.warnings) {
        std::cerr << "warning: " << warning << "\n";
    }
    return experiment;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

fs::path output_file(const dqe::ResolvedExperiment& ex, const std::string& name) {
    const auto& out = ex.config.output;
    const std::string prefix = out.prefix.empty() ? "" : out.prefix + "_";
    fs::create_directories(out.directory);
    return fs::path(out.directory) / (prefix + name);
}

void write_summary_file(const fs::path& path,
                        const std::vector<std::pair<std::string, std::string>>& rows) {
    std::ofstream out(path);
    for (const auto& [key, value] : rows) out << key << '=' << value << '\n';
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string digest_hex(std::uint64_t digest) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(digest));
    return buf;
}

int cmd_run(const CommonArgs& args, bool require_selection) {
    dqe::ResolvedExperiment ex = load(args);
    const auto target = ex.config.target.kind;
    if (require_selection && target != dqe::TargetSpec::Kind::selection) {
        throw dqe::ConfigError("select needs a [target] selection entry");
    }
    if (target == dqe::TargetSpec::Kind::trim) {
        throw dqe::ConfigError("trim targets run through the trim subcommand");
    }

    const auto& sel = ex.config.target.selection;
    const bool midpoint = require_selection && ex.config.target.median_midpoint &&
                          sel.kind == dqe::SelectionQuery::Kind::median &&
                          ex.network.node_count() % 2 == 0;
    if (midpoint) {
        // Even-N median, midpoint mode: estimate both middle elements and
        // report the midpoint of the two state vectors.
        const int n = ex.network.node_count();
        dqe::SelectionQuery lower{dqe::SelectionQuery::Kind::kth_smallest,
                                  n / 2, sel.epsilon};
        dqe::SelectionQuery upper{dqe::SelectionQuery::Kind::kth_smallest,
                                  n / 2 + 1, sel.epsilon};
        const auto seed0 =
            dqe::derive_seed(ex.config.run.master_seed, dqe::StreamKind::run, 0);
        const auto seed1 =
            dqe::derive_seed(ex.config.run.master_seed, dqe::StreamKind::run, 1);
        const auto low = dqe::estimate_selection(
            ex.network, ex.data, lower, ex.config.schedule, ex.config.noise,
            ex.config.run.iterations, seed0);
        const auto high = dqe::estimate_selection(
            ex.network, ex.data, upper, ex.config.schedule, ex.config.noise,
            ex.config.run.iterations, seed1);
        const double theta_mid = 0.5 * (low.theta_oracle + high.theta_oracle);
        const fs::path states_path = output_file(ex, "states_final.csv");
        {
            std::ofstream out(states_path);
            out << "node,x,omega_final\n";
            for (int i = 0; i < n; ++i) {
                const double mid = 0.5 * (low.omega[static_cast<std::size_t>(i)] +
                                          high.omega[static_cast<std::size_t>(i)]);
                out << i << ',' << fmt(ex.data[i]) << ',' << fmt(mid) << '\n';
            }
            if (!out) throw std::runtime_error("write failed: " + states_path.string());
        }
        double max_err = 0.0;
        for (int i = 0; i < n; ++i) {
            const double mid = 0.5 * (low.omega[static_cast<std::size_t>(i)] +
                                      high.omega[static_cast<std::size_t>(i)]);
            max_err = std::max(max_err, std::abs(mid - theta_mid));
        }
        write_summary_file(output_file(ex, "summary.txt"),
                           {{"theta_oracle", fmt(theta_mid)},
                            {"final_max_abs_error", fmt(max_err)},
                            {"iterations", std::to_string(ex.config.run.iterations)},
                            {"config_digest", digest_hex(ex.config_digest)}});
        if (!args.quiet) {
            std::cout << "median midpoint target " << fmt(theta_mid)
                      << ", max |omega - theta| " << fmt(max_err) << "\n";
        }
        return 0;
    }

    const dqe::RunSummary summary = dqe::run_experiment(ex);
    if (!args.quiet) {
        std::cout << "theta_oracle " << fmt(summary.theta_oracle)
                  << ", final max |omega - theta| "
                  << fmt(summary.final_max_abs_error) << ", final bias "
                  << fmt(summary.final_bias) << "\n";
    }
    return 0;
}

int cmd_trim(const CommonArgs& args) {
    dqe::ResolvedExperiment ex = load(args);
    if (ex.config.target.kind != dqe::TargetSpec::Kind::trim) {
        throw dqe::ConfigError("trim needs [target] trim_lower/trim_upper");
    }
    const auto result = dqe::trimmed_mean(
        ex.network, ex.data, ex.config.target.trim, ex.config.schedule,
        ex.config.noise, ex.config.run.iterations,
        ex.config.run.consensus_iterations,
        dqe::derive_seed(ex.config.run.master_seed, dqe::StreamKind::run, 0));

    const fs::path table_path = output_file(ex, "trimmed.csv");
    {
        std::ofstream out(table_path);
        out << "node,x,in_band,estimate\n";
        for (int i = 0; i < ex.network.node_count(); ++i) {
            out << i << ',' << fmt(ex.data[i]) << ','
                << (result.in_band[static_cast<std::size_t>(i)] ? 1 : 0) << ','
                << fmt(result.estimates[static_cast<std::size_t>(i)]) << '\n';
        }
        if (!out) throw std::runtime_error("write failed: " + table_path.string());
    }
    double mean_estimate = 0.0;
    for (double e : result.estimates) mean_estimate += e;
    mean_estimate /= static_cast<double>(result.estimates.size());
    write_summary_file(output_file(ex, "summary.txt"),
                       {{"cutoff_low_p", fmt(result.cutoff_low_p)},
                        {"cutoff_high_p", fmt(result.cutoff_high_p)},
                        {"band_size", std::to_string(result.band_size)},
                        {"trimmed_mean", fmt(mean_estimate)},
                        {"config_digest", digest_hex(ex.config_digest)}});
    if (!args.quiet) {
        std::cout << "trimmed mean " << fmt(mean_estimate) << " over "
                  << result.band_size << " in-band nodes\n";
    }
    return 0;
}

int cmd_outliers(const CommonArgs& args) {
    dqe::ResolvedExperiment ex = load(args);
    if (ex.config.target.kind != dqe::TargetSpec::Kind::quantile) {
        throw dqe::ConfigError("outliers needs a [target] p entry");
    }
    const auto report = dqe::flag_outliers(
        ex.network, ex.data, ex.p, ex.config.target.tail, ex.config.schedule,
        ex.config.noise, ex.config.run.iterations,
        dqe::derive_seed(ex.config.run.master_seed, dqe::StreamKind::run, 0));

    const fs::path table_path = output_file(ex, "outliers.csv");
    int flagged = 0;
    {
        std::ofstream out(table_path);
        out << "node,x,omega_final,flag\n";
        for (int i = 0; i < ex.network.node_count(); ++i) {
            const bool flag = report.flags[static_cast<std::size_t>(i)];
            flagged += flag ? 1 : 0;
            out << i << ',' << fmt(ex.data[i]) << ','
                << fmt(report.cutoff_states[static_cast<std::size_t>(i)]) << ','
                << (flag ? 1 : 0) << '\n';
        }
        if (!out) throw std::runtime_error("write failed: " + table_path.string());
    }
    write_summary_file(
        output_file(ex, "summary.txt"),
        {{"threshold_p", fmt(report.threshold_p)},
         {"tail", report.tail == dqe::Tail::upper ? "upper" : "lower"},
         {"cutoff_estimate", fmt(report.cutoff_estimate)},
         {"flagged", std::to_string(flagged)},
         {"config_digest", digest_hex(ex.config_digest)}});
    if (!args.quiet) {
        std::cout << flagged << " node(s) flagged against cutoff "
                  << fmt(report.cutoff_estimate) << "\n";
    }
    return 0;
}

int cmd_graph_info(const CommonArgs& args) {
    dqe::ResolvedExperiment ex = load(args);
    const auto& net = ex.network;
    std::cout << "nodes=" << net.node_count() << "\n"
              << "edges=" << net.edge_count() << "\n"
              << "max_degree=" << net.max_degree() << "\n"
              << "lambda2=" << fmt(net.lambda2()) << "\n"
              << "connected=" << (net.is_connected() ? "true" : "false") << "\n";
    return 0;
}

int cmd_validate(const CommonArgs& args) {
    dqe::ResolvedExperiment ex = load(args);
    if (!args.quiet) {
        std::cout << "ok (digest " << digest_hex(ex.config_digest) << ")\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"consensus-based distributed quantile estimation"};
    app.require_subcommand(1);

    CommonArgs run_args, select_args, trim_args, outlier_args, graph_args,
        validate_args;
    CLI::App* run = app.add_subcommand("run", "run the configured experiment");
    add_common(run, run_args);
    CLI::App* select =
        app.add_subcommand("select", "order-statistic estimation");
    add_common(select, select_args);
    CLI::App* trim = app.add_subcommand("trim", "distributed trimmed mean");
    add_common(trim, trim_args);
    CLI::App* outliers =
        app.add_subcommand("outliers", "node-local outlier identification");
    add_common(outliers, outlier_args);
    CLI::App* graph_info =
        app.add_subcommand("graph-info", "topology facts from a config");
    add_common(graph_info, graph_args);
    CLI::App* validate =
        app.add_subcommand("validate", "check a config without running");
    add_common(validate, validate_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return cmd_run(run_args, false);
        if (select->parsed()) return cmd_run(select_args, true);
        if (trim->parsed()) return cmd_trim(trim_args);
        if (outliers->parsed()) return cmd_outliers(outlier_args);
        if (graph_info->parsed()) return cmd_graph_info(graph_args);
        if (validate->parsed()) return cmd_validate(validate_args);
    } catch (const dqe::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
