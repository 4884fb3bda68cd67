#include "dqe/experiment.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace dqe {

namespace {

std::string trim_ws(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

struct RawEntry {
    std::string value;
    int line = 0;
    bool used = false;
};

// section -> key -> entry
using RawConfig = std::map<std::string, std::map<std::string, RawEntry>>;

RawConfig read_raw(std::istream& in) {
    RawConfig raw;
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string text = trim_ws(line);
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']') {
                throw ConfigError("unterminated section header", line_no);
            }
            section = trim_ws(text.substr(1, text.size() - 2));
            if (section.empty()) throw ConfigError("empty section name", line_no);
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("expected 'key = value'", line_no);
        }
        if (section.empty()) {
            throw ConfigError("key outside any [section]", line_no);
        }
        const std::string key = trim_ws(text.substr(0, eq));
        const std::string value = trim_ws(text.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ConfigError("expected 'key = value'", line_no);
        }
        if (raw[section].count(key)) {
            throw ConfigError("duplicate key '" + key + "'", line_no);
        }
        raw[section][key] = RawEntry{value, line_no, false};
    }
    return raw;
}

// Typed lookups. Every failure is appended to `errors` so the caller can
// report all problems in one pass.
class Reader {
public:
    Reader(RawConfig& raw, std::vector<std::string>& errors)
        : raw_(raw), errors_(errors) {}

    bool has(const std::string& section, const std::string& key) {
        auto s = raw_.find(section);
        return s != raw_.end() && s->second.count(key) > 0;
    }

    std::string str(const std::string& section, const std::string& key,
                    const std::string& fallback = {}) {
        RawEntry* e = fetch(section, key);
        return e ? e->value : fallback;
    }

    double num(const std::string& section, const std::string& key,
               double fallback) {
        RawEntry* e = fetch(section, key);
        if (!e) return fallback;
        double out = fallback;
        if (!parse_double(e->value, out)) {
            fail(*e, section, key, "not a number");
        }
        return out;
    }

    std::int64_t integer(const std::string& section, const std::string& key,
                         std::int64_t fallback) {
        RawEntry* e = fetch(section, key);
        if (!e) return fallback;
        std::int64_t out = fallback;
        const auto* begin = e->value.data();
        const auto* end = begin + e->value.size();
        auto [ptr, ec] = std::from_chars(begin, end, out);
        if (ec != std::errc{} || ptr != end) {
            fail(*e, section, key, "not an integer");
        }
        return out;
    }

    std::uint64_t unsigned_integer(const std::string& section,
                                   const std::string& key,
                                   std::uint64_t fallback) {
        RawEntry* e = fetch(section, key);
        if (!e) return fallback;
        std::uint64_t out = fallback;
        const auto* begin = e->value.data();
        const auto* end = begin + e->value.size();
        auto [ptr, ec] = std::from_chars(begin, end, out);
        if (ec != std::errc{} || ptr != end) {
            fail(*e, section, key, "not an unsigned integer");
        }
        return out;
    }

    bool flag(const std::string& section, const std::string& key,
              bool fallback) {
        RawEntry* e = fetch(section, key);
        if (!e) return fallback;
        if (e->value == "true" || e->value == "1") return true;
        if (e->value == "false" || e->value == "0") return false;
        fail(*e, section, key, "expected true/false");
        return fallback;
    }

    void require(const std::string& section, const std::string& key) {
        if (!has(section, key)) {
            errors_.push_back("[" + section + "] missing required key '" + key +
                              "'");
        }
    }

    void report_unused() {
        for (auto& [section, entries] : raw_) {
            for (auto& [key, entry] : entries) {
                if (!entry.used) {
                    errors_.push_back("line " + std::to_string(entry.line) +
                                      ": unknown key [" + section + "] " + key);
                }
            }
        }
    }

private:
    RawEntry* fetch(const std::string& section, const std::string& key) {
        auto s = raw_.find(section);
        if (s == raw_.end()) return nullptr;
        auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        k->second.used = true;
        return &k->second;
    }

    static bool parse_double(const std::string& text, double& out) {
        const auto* begin = text.data();
        const auto* end = begin + text.size();
        auto [ptr, ec] = std::from_chars(begin, end, out);
        return ec == std::errc{} && ptr == end;
    }

    void fail(const RawEntry& e, const std::string& section,
              const std::string& key, const std::string& why) {
        errors_.push_back("line " + std::to_string(e.line) + ": [" + section +
                          "] " + key + ": " + why);
    }

    RawConfig& raw_;
    std::vector<std::string>& errors_;
};

void throw_all(const std::vector<std::string>& errors) {
    if (errors.empty()) return;
    std::string message = "invalid config:";
    for (const auto& e : errors) message += "\n  " + e;
    throw ConfigError(message);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Fnv1a {
public:
    void bytes(const void* data, std::size_t size) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < size; ++i) {
            hash_ ^= p[i];
            hash_ *= 1099511628211ULL;
        }
    }
    void text(const std::string& s) { bytes(s.data(), s.size()); }
    void word(std::uint64_t v) { bytes(&v, sizeof v); }
    void real(double v) { word(std::bit_cast<std::uint64_t>(v)); }
    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 14695981039346656037ULL;
};

std::uint64_t digest(const ExperimentConfig& cfg, const Network& network,
                     const MeasurementSet& data, double p) {
    Fnv1a h;
    h.word(static_cast<std::uint64_t>(network.node_count()));
    for (int u = 0; u < network.node_count(); ++u) {
        for (int v : network.neighbors(u)) {
            if (v > u) {
                h.word(static_cast<std::uint64_t>(u));
                h.word(static_cast<std::uint64_t>(v));
            }
        }
    }
    for (double x : data.values()) h.real(x);
    h.word(static_cast<std::uint64_t>(cfg.target.kind));
    h.real(p);
    if (cfg.target.kind == TargetSpec::Kind::trim) {
        h.real(cfg.target.trim.lower_percent);
        h.real(cfg.target.trim.upper_percent);
    }
    h.word(cfg.target.tail == Tail::upper ? 0 : 1);
    h.real(cfg.schedule.alpha0);
    h.real(cfg.schedule.tau1);
    h.real(cfg.schedule.eta0);
    h.real(cfg.schedule.tau2);
    h.word(static_cast<std::uint64_t>(cfg.noise.kind));
    h.real(cfg.noise.variance);
    h.word(static_cast<std::uint64_t>(cfg.run.iterations));
    h.word(static_cast<std::uint64_t>(cfg.run.record));
    h.word(static_cast<std::uint64_t>(cfg.run.stride));
    h.word(static_cast<std::uint64_t>(cfg.run.ensemble));
    h.word(cfg.run.master_seed);
    h.word(static_cast<std::uint64_t>(cfg.run.consensus_iterations));
    return h.value();
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
    RawConfig raw = read_raw(in);
    std::vector<std::string> errors;
    Reader reader(raw, errors);
    ExperimentConfig cfg;

    // [topology]
    reader.require("topology", "generator");
    const std::string generator = reader.str("topology", "generator");
    if (generator == "random_geometric") {
        cfg.topology.kind = TopologySpec::Kind::random_geometric;
        reader.require("topology", "nodes");
        reader.require("topology", "radius");
        cfg.topology.nodes =
            static_cast<int>(reader.integer("topology", "nodes", 0));
        cfg.topology.radius = reader.num("topology", "radius", 0.0);
    } else if (generator == "erdos_renyi") {
        cfg.topology.kind = TopologySpec::Kind::erdos_renyi;
        reader.require("topology", "nodes");
        reader.require("topology", "edge_probability");
        cfg.topology.nodes =
            static_cast<int>(reader.integer("topology", "nodes", 0));
        cfg.topology.edge_probability =
            reader.num("topology", "edge_probability", 0.0);
    } else if (generator == "edge_list") {
        cfg.topology.kind = TopologySpec::Kind::edge_list;
        reader.require("topology", "path");
        cfg.topology.path = reader.str("topology", "path");
    } else if (!generator.empty()) {
        errors.push_back("[topology] generator must be random_geometric, "
                         "erdos_renyi or edge_list");
    }

    // [data]
    reader.require("data", "distribution");
    const std::string distribution = reader.str("data", "distribution");
    if (distribution == "uniform_grid") {
        cfg.data.kind = DataSpec::Kind::uniform_grid;
    } else if (distribution == "lognormal") {
        cfg.data.kind = DataSpec::Kind::lognormal;
        cfg.data.mu = reader.num("data", "mu", 0.0);
        cfg.data.sigma_sq = reader.num("data", "sigma_sq", 0.25);
    } else if (distribution == "file") {
        cfg.data.kind = DataSpec::Kind::file;
        reader.require("data", "path");
        cfg.data.path = reader.str("data", "path");
    } else if (!distribution.empty()) {
        errors.push_back(
            "[data] distribution must be uniform_grid, lognormal or file");
    }

    // [target] -- exactly one of p | selection | trim_lower/trim_upper
    const bool has_p = reader.has("target", "p");
    const bool has_selection = reader.has("target", "selection");
    const bool has_trim =
        reader.has("target", "trim_lower") || reader.has("target", "trim_upper");
    if (has_p + has_selection + has_trim != 1) {
        errors.push_back(
            "[target] needs exactly one of: p, selection, trim_lower/trim_upper");
    }
    if (has_p) {
        cfg.target.kind = TargetSpec::Kind::quantile;
        cfg.target.p = reader.num("target", "p", 0.0);
    } else if (has_selection) {
        cfg.target.kind = TargetSpec::Kind::selection;
        const std::string kind = reader.str("target", "selection");
        if (kind == "median") {
            cfg.target.selection.kind = SelectionQuery::Kind::median;
        } else if (kind == "minimum") {
            cfg.target.selection.kind = SelectionQuery::Kind::minimum;
        } else if (kind == "maximum") {
            cfg.target.selection.kind = SelectionQuery::Kind::maximum;
        } else if (kind == "kth_smallest") {
            cfg.target.selection.kind = SelectionQuery::Kind::kth_smallest;
            reader.require("target", "k");
            cfg.target.selection.k =
                static_cast<int>(reader.integer("target", "k", 0));
        } else {
            errors.push_back("[target] selection must be median, minimum, "
                             "maximum or kth_smallest");
        }
        cfg.target.selection.epsilon = reader.num("target", "epsilon", 0.5);
        cfg.target.median_midpoint =
            reader.flag("target", "median_midpoint", false);
    } else if (has_trim) {
        cfg.target.kind = TargetSpec::Kind::trim;
        reader.require("target", "trim_lower");
        reader.require("target", "trim_upper");
        cfg.target.trim.lower_percent = reader.num("target", "trim_lower", 0.0);
        cfg.target.trim.upper_percent = reader.num("target", "trim_upper", 0.0);
    }
    const std::string tail = reader.str("target", "tail", "upper");
    if (tail == "upper") {
        cfg.target.tail = Tail::upper;
    } else if (tail == "lower") {
        cfg.target.tail = Tail::lower;
    } else {
        errors.push_back("[target] tail must be upper or lower");
    }

    // [schedule]
    cfg.schedule.alpha0 = reader.num("schedule", "alpha0", 1.0);
    cfg.schedule.tau1 = reader.num("schedule", "tau1", 1.0);
    cfg.schedule.tau2 = reader.num("schedule", "tau2", 0.505);
    const std::string eta0 = reader.str("schedule", "eta0", "auto");
    if (eta0 == "auto") {
        cfg.eta0_auto = true;
    } else {
        double value = 0.0;
        const auto* begin = eta0.data();
        const auto* end = begin + eta0.size();
        auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{} || ptr != end) {
            errors.push_back("[schedule] eta0 must be a number or 'auto'");
        }
        cfg.schedule.eta0 = value;
    }

    // [noise]
    const std::string noise_kind = reader.str("noise", "kind", "none");
    if (noise_kind == "none") {
        cfg.noise = NoiseModel::none();
        if (reader.has("noise", "variance")) {
            reader.num("noise", "variance", 0.0);  // tolerated, ignored
        }
    } else if (noise_kind == "gaussian") {
        reader.require("noise", "variance");
        const double variance = reader.num("noise", "variance", 0.0);
        if (variance < 0.0) {
            errors.push_back("[noise] variance must be >= 0");
        } else {
            cfg.noise = NoiseModel::gaussian(variance);
        }
    } else {
        errors.push_back("[noise] kind must be none or gaussian");
    }

    // [run]
    reader.require("run", "iterations");
    reader.require("run", "master_seed");
    cfg.run.iterations = reader.integer("run", "iterations", 0);
    cfg.run.master_seed = reader.unsigned_integer("run", "master_seed", 0);
    const std::string record = reader.str("run", "record", "log");
    if (record == "log") {
        cfg.run.record = RunSpec::Record::log;
    } else if (record == "stride") {
        cfg.run.record = RunSpec::Record::stride;
        reader.require("run", "stride");
        cfg.run.stride = reader.integer("run", "stride", 0);
    } else {
        errors.push_back("[run] record must be log or stride");
    }
    cfg.run.ensemble = static_cast<int>(reader.integer("run", "ensemble", 1));
    cfg.run.workers = static_cast<int>(reader.integer("run", "workers", 0));
    cfg.run.consensus_iterations =
        reader.integer("run", "consensus_iterations", 2000);

    // [output]
    cfg.output.directory = reader.str("output", "directory", ".");
    cfg.output.prefix = reader.str("output", "prefix", "");

    reader.report_unused();

    // Shape checks that do not need the resolved topology.
    if (cfg.topology.kind != TopologySpec::Kind::edge_list &&
        cfg.topology.nodes < 2) {
        errors.push_back("[topology] nodes must be >= 2");
    }
    if (cfg.run.iterations < 1) {
        errors.push_back("[run] iterations must be >= 1");
    }
    if (cfg.run.record == RunSpec::Record::stride && cfg.run.stride < 1) {
        errors.push_back("[run] stride must be >= 1");
    }
    if (cfg.run.ensemble < 1) {
        errors.push_back("[run] ensemble must be >= 1");
    }
    if (cfg.run.consensus_iterations < 0) {
        errors.push_back("[run] consensus_iterations must be >= 0");
    }
    throw_all(errors);
    return cfg;
}

MeasurementSet generate_data(const DataSpec& spec, int node_count, Rng& rng) {
    switch (spec.kind) {
        case DataSpec::Kind::uniform_grid: {
            std::vector<double> values(static_cast<std::size_t>(node_count));
            for (int i = 0; i < node_count; ++i) {
                values[static_cast<std::size_t>(i)] =
                    static_cast<double>(i) / static_cast<double>(node_count);
            }
            return MeasurementSet(std::move(values));
        }
        case DataSpec::Kind::lognormal: {
            const double sigma = std::sqrt(spec.sigma_sq);
            std::vector<double> values(static_cast<std::size_t>(node_count));
            for (int i = 0; i < node_count; ++i) {
                values[static_cast<std::size_t>(i)] =
                    std::exp(rng.normal(spec.mu, sigma));
            }
            return MeasurementSet(std::move(values));
        }
        case DataSpec::Kind::file: {
            std::ifstream in(spec.path);
            if (!in) {
                throw ConfigError("data file: cannot open " + spec.path);
            }
            std::vector<double> values;
            std::string line;
            int line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                const std::string text = trim_ws(line);
                if (text.empty() || text.front() == '#') continue;
                double v = 0.0;
                const auto* begin = text.data();
                const auto* end = begin + text.size();
                auto [ptr, ec] = std::from_chars(begin, end, v);
                if (ec != std::errc{} || ptr != end) {
                    throw ConfigError("data file " + spec.path +
                                          ": bad value '" + text + "'",
                                      line_no);
                }
                values.push_back(v);
            }
            return MeasurementSet(std::move(values));
        }
    }
    throw ConfigError("generate_data: unknown distribution");
}

ResolvedExperiment resolve(ExperimentConfig cfg) {
    // Topology first: eta0 = auto needs d_max, selection targets need N.
    Network network = [&] {
        const std::uint64_t seed =
            derive_seed(cfg.run.master_seed, StreamKind::graph);
        switch (cfg.topology.kind) {
            case TopologySpec::Kind::random_geometric:
                return Network::random_geometric(cfg.topology.nodes,
                                                 cfg.topology.radius, seed);
            case TopologySpec::Kind::erdos_renyi:
                return Network::erdos_renyi(cfg.topology.nodes,
                                            cfg.topology.edge_probability, seed);
            case TopologySpec::Kind::edge_list:
                return Network::from_edge_list_file(cfg.topology.path);
        }
        throw ConfigError("unknown topology kind");
    }();
    const int n = network.node_count();
    cfg.topology.nodes = n;

    Rng data_rng(derive_seed(cfg.run.master_seed, StreamKind::data));
    MeasurementSet data = generate_data(cfg.data, n, data_rng);

    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    if (data.size() != n) {
        errors.push_back("data provides " + std::to_string(data.size()) +
                         " values for " + std::to_string(n) + " nodes");
    }
    if (!network.is_connected()) {
        errors.push_back("topology is not connected");
    }

    if (cfg.eta0_auto) {
        cfg.schedule.eta0 = 0.5 / static_cast<double>(network.max_degree());
    }
    for (const auto& violation : validate_schedule(cfg.schedule)) {
        errors.push_back("schedule: " + violation);
    }

    double p = std::numeric_limits<double>::quiet_NaN();
    switch (cfg.target.kind) {
        case TargetSpec::Kind::quantile:
            try {
                const QuantileTarget target = validate_target(cfg.target.p, n);
                p = target.p;
                if (target.degenerate) warnings.push_back(target.warning);
            } catch (const std::domain_error& e) {
                errors.push_back(e.what());
            }
            break;
        case TargetSpec::Kind::selection:
            try {
                p = selection_to_p(cfg.target.selection, n);
            } catch (const std::domain_error& e) {
                errors.push_back(e.what());
            }
            break;
        case TargetSpec::Kind::trim:
            if (!(cfg.target.trim.lower_percent > 0.0 &&
                  cfg.target.trim.lower_percent < cfg.target.trim.upper_percent &&
                  cfg.target.trim.upper_percent < 100.0)) {
                errors.push_back("trim band: need 0 < trim_lower < trim_upper < 100");
            }
            break;
    }
    throw_all(errors);

    const std::string stability =
        averaging_stability_warning(cfg.schedule, network);
    if (!stability.empty()) warnings.push_back(stability);

    ResolvedExperiment experiment{std::move(cfg), std::move(network),
                                  std::move(data), p, 0, std::move(warnings)};
    experiment.config_digest = digest(experiment.config, experiment.network,
                                      experiment.data, experiment.p);
    return experiment;
}

ResolvedExperiment load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path);
    }
    return resolve(parse_config(in));
}

std::vector<std::int64_t> record_grid(const RunSpec& run) {
    return run.record == RunSpec::Record::log
               ? log_spaced_iterations(run.iterations)
               : stride_iterations(run.iterations, run.stride);
}

RunSummary run_experiment(const ResolvedExperiment& experiment) {
    const ExperimentConfig& cfg = experiment.config;
    if (cfg.target.kind == TargetSpec::Kind::trim) {
        throw std::invalid_argument(
            "run_experiment: trim targets run through trimmed_mean");
    }

    // Probe the output directory before any computation.
    const fs::path out_dir(cfg.output.directory);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    const fs::path probe = out_dir / ".dqe_probe";
    {
        std::ofstream test(probe);
        if (!test || !(test << "probe\n")) {
            throw std::runtime_error("output directory not writable: " +
                                     out_dir.string());
        }
    }
    fs::remove(probe);

    const auto t0 = std::chrono::steady_clock::now();
    const auto grid = record_grid(cfg.run);
    const EnsembleResult result = run_ensemble(
        experiment.network, experiment.data, experiment.p, cfg.schedule,
        cfg.noise, cfg.run.ensemble, cfg.run.master_seed, cfg.run.iterations,
        grid, cfg.run.workers);

    RunSummary summary;
    summary.theta_oracle = quantile_oracle(experiment.p, experiment.data);
    summary.iterations = cfg.run.iterations;
    summary.config_digest = experiment.config_digest;
    summary.final_bias = result.final_bias;
    for (int i = 0; i < experiment.network.node_count(); ++i) {
        summary.final_max_abs_error = std::max(
            summary.final_max_abs_error,
            std::abs(result.mean_final_state[static_cast<std::size_t>(i)] -
                     summary.theta_oracle));
    }
    summary.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    const std::string prefix =
        cfg.output.prefix.empty() ? "" : cfg.output.prefix + "_";
    const fs::path trace_path = out_dir / (prefix + "trace.csv");
    const fs::path states_path = out_dir / (prefix + "states_final.csv");
    const fs::path summary_path = out_dir / (prefix + "summary.txt");
    std::vector<fs::path> written;
    try {
        {
            std::ofstream out(trace_path);
            out << "iteration,metric\n";
            for (std::size_t i = 0; i < grid.size(); ++i) {
                out << grid[i] << ',' << format_double(result.trace.values[i])
                    << '\n';
            }
            if (!out) throw std::runtime_error("write failed: " + trace_path.string());
            written.push_back(trace_path);
        }
        {
            std::ofstream out(states_path);
            out << "node,x,omega_final\n";
            for (int i = 0; i < experiment.network.node_count(); ++i) {
                out << i << ',' << format_double(experiment.data[i]) << ','
                    << format_double(
                           result.mean_final_state[static_cast<std::size_t>(i)])
                    << '\n';
            }
            if (!out) throw std::runtime_error("write failed: " + states_path.string());
            written.push_back(states_path);
        }
        {
            std::ofstream out(summary_path);
            char digest_buf[32];
            std::snprintf(digest_buf, sizeof digest_buf, "%016llx",
                          static_cast<unsigned long long>(summary.config_digest));
            out << "theta_oracle=" << format_double(summary.theta_oracle) << '\n'
                << "final_max_abs_error="
                << format_double(summary.final_max_abs_error) << '\n'
                << "final_bias=" << format_double(summary.final_bias) << '\n'
                << "iterations=" << summary.iterations << '\n'
                << "wall_time_seconds="
                << format_double(summary.wall_time_seconds) << '\n'
                << "config_digest=" << digest_buf << '\n';
            if (!out) throw std::runtime_error("write failed: " + summary_path.string());
            written.push_back(summary_path);
        }
    } catch (...) {
        for (const auto& path : written) fs::remove(path, ec);
        fs::remove(trace_path, ec);
        fs::remove(states_path, ec);
        fs::remove(summary_path, ec);
        throw;
    }
    return summary;
}

}  // namespace dqe
