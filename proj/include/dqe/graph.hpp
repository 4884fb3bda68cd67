#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dqe {

// Topology generation gave up: no connected graph within the retry budget.
class GenerationError : public std::runtime_error {
public:
    GenerationError(const std::string& what, int attempts)
        : std::runtime_error(what), attempts_(attempts) {}
    int attempts() const { return attempts_; }

private:
    int attempts_;
};

using Edge = std::pair<int, int>;

// Undirected simple graph plus the derived objects the estimator needs:
// integer degree vector, Laplacian L = D - A, adjacency lists, maximum
// degree, algebraic connectivity. Immutable once built.
class Network {
public:
    static Network from_edges(int node_count, const std::vector<Edge>& edges);

    // Nodes placed uniformly at random in the unit square, edge iff the
    // Euclidean distance is <= radius. Placement is redrawn from the same
    // stream until the graph is connected, up to kMaxAttempts.
    static Network random_geometric(int node_count, double radius,
                                    std::uint64_t seed);

    // Each unordered pair becomes an edge independently with the given
    // probability; same retry-until-connected policy.
    static Network erdos_renyi(int node_count, double edge_probability,
                               std::uint64_t seed);

    // Plain-text format: first line N, then one "u v" pair per line
    // (0-based). Lines starting with '#' are ignored.
    static Network from_edge_list_file(const std::string& path);

    int node_count() const { return n_; }
    int edge_count() const { return edge_count_; }
    bool has_edge(int u, int v) const {
        return adjacency_[static_cast<std::size_t>(u) * n_ + v] != 0;
    }
    const std::vector<int>& degrees() const { return degrees_; }
    int max_degree() const { return max_degree_; }
    const std::vector<int>& neighbors(int n) const {
        return neighbors_[static_cast<std::size_t>(n)];
    }

    // L = D - A, row-major. Assembled from the integer degrees and
    // adjacency, so every row sums to exactly zero.
    std::vector<double> laplacian() const;

    // Second-smallest Laplacian eigenvalue; positive iff connected.
    // Computed by the Jacobi solver on first use and cached. The lazy fill
    // is not synchronized: call once before sharing the network across
    // threads.
    double lambda2() const;

    // Breadth-first search from node 0.
    bool is_connected() const;

    static constexpr int kMaxAttempts = 1000;

private:
    Network() = default;
    void finalize();  // derive degrees/neighbors/max_degree from adjacency

    int n_ = 0;
    int edge_count_ = 0;
    int max_degree_ = 0;
    std::vector<std::uint8_t> adjacency_;  // dense symmetric, zero diagonal
    std::vector<int> degrees_;
    std::vector<std::vector<int>> neighbors_;
    mutable std::optional<double> lambda2_;
};

}  // namespace dqe
