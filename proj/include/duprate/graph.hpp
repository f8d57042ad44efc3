#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace duprate::graph {

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Undirected adjacency over labelled nodes. Each edge is stored once with
/// first < second; self-loops are rejected.
class SpatialGraph {
public:
    SpatialGraph() = default;
    static SpatialGraph from_edges(std::vector<std::string> labels,
                                   const std::vector<std::pair<std::string, std::string>>& edges);
    /// Chain a0 - a1 - ... - a(n-1); used for the month random walk.
    static SpatialGraph path(std::vector<std::string> labels);

    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
    std::size_t index_of(const std::string& label) const;

    /// Graph Laplacian D - W.
    Eigen::MatrixXd laplacian() const;

private:
    std::vector<std::string> labels_;
    std::vector<std::pair<std::size_t, std::size_t>> edges_;
};

/// Smoothness penalty -weight * sum over edges of (b_a - b_b)^2 on one factor.
struct PenaltySpec {
    std::string factor;
    SpatialGraph graph;
    double weight = 5.0;
};

struct PenaltyValue {
    double value = 0.0;
    Eigen::VectorXd gradient;  // aligned with the coefficient labels passed in
};

/// Evaluates the penalty on coefficients indexed by `labels`. Every graph node
/// must appear among the labels.
PenaltyValue graph_penalty(std::span<const double> coefficients,
                           std::span<const std::string> labels, const PenaltySpec& spec);

}  // namespace duprate::graph
