#pragma once

#include "qde/errors.hpp"
#include "qde/math.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

namespace qde {

/// Undirected weighted edge, 0-based endpoints.
struct Edge {
    std::size_t i = 0;
    std::size_t j = 0;
    double weight = 1.0;
};

/// Undirected weighted communication graph over m sensors.
/// Immutable after construction: symmetric, nonnegative, zero diagonal.
class NetworkGraph {
public:
    NetworkGraph() = default;

    explicit NetworkGraph(std::size_t m) : weights_(Matrix::Zero(static_cast<Eigen::Index>(m),
                                                                  static_cast<Eigen::Index>(m))) {
        build_adjacency();
    }

    NetworkGraph(std::size_t m, const std::vector<Edge>& edges) : NetworkGraph(m) {
        for (const auto& e : edges) {
            if (e.i >= m || e.j >= m) {
                throw DomainError("NetworkGraph: edge endpoint out of range");
            }
            if (e.i == e.j) {
                throw DomainError("NetworkGraph: self-loop on node " + std::to_string(e.i));
            }
            if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
                throw DomainError("NetworkGraph: edge weight must be finite and nonnegative");
            }
            const auto a = static_cast<Eigen::Index>(e.i);
            const auto b = static_cast<Eigen::Index>(e.j);
            weights_(a, b) = e.weight;
            weights_(b, a) = e.weight;
        }
        build_adjacency();
    }

    /// From a full matrix; rejects asymmetric or negative entries and nonzero diagonal.
    explicit NetworkGraph(Matrix weights) : weights_(std::move(weights)) {
        if (weights_.rows() != weights_.cols()) {
            throw DomainError("NetworkGraph: weight matrix must be square");
        }
        for (Eigen::Index a = 0; a < weights_.rows(); ++a) {
            if (weights_(a, a) != 0.0) {
                throw DomainError("NetworkGraph: nonzero diagonal");
            }
            for (Eigen::Index b = 0; b < weights_.cols(); ++b) {
                if (weights_(a, b) != weights_(b, a) || !(weights_(a, b) >= 0.0)) {
                    throw DomainError("NetworkGraph: weights must be symmetric and nonnegative");
                }
            }
        }
        build_adjacency();
    }

    static NetworkGraph cycle(std::size_t m, double w = 1.0) {
        std::vector<Edge> edges;
        if (m == 2) {
            edges.push_back({0, 1, w});
        } else if (m > 2) {
            for (std::size_t i = 0; i < m; ++i) edges.push_back({i, (i + 1) % m, w});
        }
        return {m, edges};
    }

    static NetworkGraph path(std::size_t m, double w = 1.0) {
        std::vector<Edge> edges;
        for (std::size_t i = 0; i + 1 < m; ++i) edges.push_back({i, i + 1, w});
        return {m, edges};
    }

    static NetworkGraph complete(std::size_t m, double w = 1.0) {
        std::vector<Edge> edges;
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = i + 1; j < m; ++j) edges.push_back({i, j, w});
        return {m, edges};
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.rows()); }
    const Matrix& weights() const noexcept { return weights_; }

    double weight(std::size_t i, std::size_t j) const {
        check_index(i);
        check_index(j);
        return weights_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

    /// Sorted neighbor indices {j : a_ij > 0}.
    const std::vector<std::size_t>& neighbors(std::size_t i) const {
        check_index(i);
        return adjacency_[i];
    }

    std::size_t degree(std::size_t i) const { return neighbors(i).size(); }

    /// Sum of degrees, i.e. the number of directed channels.
    std::size_t total_degree() const noexcept {
        std::size_t s = 0;
        for (const auto& nb : adjacency_) s += nb.size();
        return s;
    }

    /// Undirected edges (i < j) with positive weight.
    std::vector<Edge> edges() const {
        std::vector<Edge> out;
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j : adjacency_[i])
                if (i < j) out.push_back({i, j, weight(i, j)});
        return out;
    }

private:
    void check_index(std::size_t i) const {
        if (i >= size()) {
            throw DomainError("NetworkGraph: sensor index " + std::to_string(i) + " out of range");
        }
    }

    void build_adjacency() {
        adjacency_.assign(size(), {});
        for (std::size_t i = 0; i < size(); ++i)
            for (std::size_t j = 0; j < size(); ++j)
                if (weights_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0)
                    adjacency_[i].push_back(j);
    }

    Matrix weights_;
    std::vector<std::vector<std::size_t>> adjacency_;
};

/// L = D - A.
inline Matrix laplacian(const NetworkGraph& g) {
    const Matrix& a = g.weights();
    Matrix l = -a;
    l.diagonal() = a.rowwise().sum();
    return l;
}

/// Breadth-first reachability from node 0 over positive-weight edges.
inline bool is_connected(const NetworkGraph& g) {
    const std::size_t m = g.size();
    if (m <= 1) return true;
    std::vector<bool> seen(m, false);
    std::queue<std::size_t> frontier;
    seen[0] = true;
    frontier.push(0);
    std::size_t reached = 1;
    while (!frontier.empty()) {
        const std::size_t u = frontier.front();
        frontier.pop();
        for (std::size_t v : g.neighbors(u)) {
            if (!seen[v]) {
                seen[v] = true;
                ++reached;
                frontier.push(v);
            }
        }
    }
    return reached == m;
}

/// Ascending Laplacian spectrum via dense symmetric eigendecomposition.
inline Vector laplacian_spectrum(const NetworkGraph& g) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(laplacian(g), Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

/// Algebraic connectivity: second-smallest Laplacian eigenvalue.
/// Throws PreconditionError for disconnected graphs (where it would be 0).
inline double lambda2(const NetworkGraph& g) {
    if (g.size() < 2) {
        throw PreconditionError("lambda2: graph needs at least two nodes");
    }
    if (!is_connected(g)) {
        throw PreconditionError("lambda2: graph is disconnected");
    }
    return laplacian_spectrum(g)[1];
}

} // namespace qde
