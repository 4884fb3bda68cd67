#include "dqe/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "dqe/jacobi.hpp"
#include "dqe/rng.hpp"

namespace dqe {

void Network::finalize() {
    degrees_.assign(static_cast<std::size_t>(n_), 0);
    neighbors_.assign(static_cast<std::size_t>(n_), {});
    edge_count_ = 0;
    max_degree_ = 0;
    for (int u = 0; u < n_; ++u) {
        for (int v = 0; v < n_; ++v) {
            if (adjacency_[static_cast<std::size_t>(u) * n_ + v]) {
                degrees_[static_cast<std::size_t>(u)] += 1;
                neighbors_[static_cast<std::size_t>(u)].push_back(v);
            }
        }
        max_degree_ = std::max(max_degree_, degrees_[static_cast<std::size_t>(u)]);
        edge_count_ += degrees_[static_cast<std::size_t>(u)];
    }
    edge_count_ /= 2;
}

Network Network::from_edges(int node_count, const std::vector<Edge>& edges) {
    if (node_count <= 0) {
        throw std::invalid_argument("Network: node_count must be positive");
    }
    Network net;
    net.n_ = node_count;
    net.adjacency_.assign(static_cast<std::size_t>(node_count) * node_count, 0);
    for (const auto& [u, v] : edges) {
        if (u < 0 || u >= node_count || v < 0 || v >= node_count) {
            throw std::out_of_range("Network: edge index out of range: (" +
                                    std::to_string(u) + ", " + std::to_string(v) +
                                    ")");
        }
        if (u == v) {
            throw std::invalid_argument("Network: self-loop edge at node " +
                                        std::to_string(u));
        }
        // duplicates collapse
        net.adjacency_[static_cast<std::size_t>(u) * node_count + v] = 1;
        net.adjacency_[static_cast<std::size_t>(v) * node_count + u] = 1;
    }
    net.finalize();
    return net;
}

Network Network::random_geometric(int node_count, double radius,
                                  std::uint64_t seed) {
    if (node_count < 2) {
        throw std::invalid_argument("random_geometric: node_count must be >= 2");
    }
    if (radius < 0.0) {
        throw std::invalid_argument("random_geometric: radius must be >= 0");
    }
    Rng rng(seed);
    const double r2 = radius * radius;
    for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
        std::vector<double> x(static_cast<std::size_t>(node_count));
        std::vector<double> y(static_cast<std::size_t>(node_count));
        for (int i = 0; i < node_count; ++i) {
            x[static_cast<std::size_t>(i)] = rng.uniform01();
            y[static_cast<std::size_t>(i)] = rng.uniform01();
        }
        std::vector<Edge> edges;
        for (int u = 0; u < node_count; ++u) {
            for (int v = u + 1; v < node_count; ++v) {
                const double dx = x[static_cast<std::size_t>(u)] - x[static_cast<std::size_t>(v)];
                const double dy = y[static_cast<std::size_t>(u)] - y[static_cast<std::size_t>(v)];
                if (dx * dx + dy * dy <= r2) edges.emplace_back(u, v);
            }
        }
        Network net = from_edges(node_count, edges);
        if (net.is_connected()) return net;
    }
    throw GenerationError(
        "random_geometric: no connected graph after " +
            std::to_string(kMaxAttempts) + " attempts (radius " +
            std::to_string(radius) + ")",
        kMaxAttempts);
}

Network Network::erdos_renyi(int node_count, double edge_probability,
                             std::uint64_t seed) {
    if (node_count < 2) {
        throw std::invalid_argument("erdos_renyi: node_count must be >= 2");
    }
    if (edge_probability < 0.0 || edge_probability > 1.0) {
        throw std::invalid_argument("erdos_renyi: edge_probability in [0,1]");
    }
    Rng rng(seed);
    for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
        std::vector<Edge> edges;
        for (int u = 0; u < node_count; ++u) {
            for (int v = u + 1; v < node_count; ++v) {
                if (rng.uniform01() < edge_probability) edges.emplace_back(u, v);
            }
        }
        Network net = from_edges(node_count, edges);
        if (net.is_connected()) return net;
    }
    throw GenerationError(
        "erdos_renyi: no connected graph after " + std::to_string(kMaxAttempts) +
            " attempts (p " + std::to_string(edge_probability) + ")",
        kMaxAttempts);
}

Network Network::from_edge_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("edge list: cannot open " + path);
    }
    std::string line;
    int line_no = 0;
    int node_count = -1;
    std::vector<Edge> edges;
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream fields(line);
        if (node_count < 0) {
            if (!(fields >> node_count) || node_count <= 0) {
                throw std::runtime_error("edge list: bad node count at " + path +
                                         ":" + std::to_string(line_no));
            }
            continue;
        }
        int u = 0, v = 0;
        if (!(fields >> u >> v)) {
            throw std::runtime_error("edge list: expected 'u v' at " + path + ":" +
                                     std::to_string(line_no));
        }
        edges.emplace_back(u, v);
    }
    if (node_count < 0) {
        throw std::runtime_error("edge list: missing node count in " + path);
    }
    return from_edges(node_count, edges);
}

std::vector<double> Network::laplacian() const {
    std::vector<double> lap(static_cast<std::size_t>(n_) * n_, 0.0);
    for (int u = 0; u < n_; ++u) {
        lap[static_cast<std::size_t>(u) * n_ + u] =
            static_cast<double>(degrees_[static_cast<std::size_t>(u)]);
        for (int v : neighbors_[static_cast<std::size_t>(u)]) {
            lap[static_cast<std::size_t>(u) * n_ + v] = -1.0;
        }
    }
    return lap;
}

double Network::lambda2() const {
    if (!lambda2_) {
        if (n_ < 2) {
            lambda2_ = 0.0;
        } else {
            lambda2_ = symmetric_eigenvalues(laplacian(), n_)[1];
        }
    }
    return *lambda2_;
}

bool Network::is_connected() const {
    if (n_ == 0) return false;
    std::vector<char> visited(static_cast<std::size_t>(n_), 0);
    std::queue<int> frontier;
    frontier.push(0);
    visited[0] = 1;
    int reached = 1;
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop();
        for (int v : neighbors_[static_cast<std::size_t>(u)]) {
            if (!visited[static_cast<std::size_t>(v)]) {
                visited[static_cast<std::size_t>(v)] = 1;
                ++reached;
                frontier.push(v);
            }
        }
    }
    return reached == n_;
}

}  // namespace dqe
