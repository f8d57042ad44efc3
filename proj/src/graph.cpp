#include "duprate/graph.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>

namespace duprate::graph {

SpatialGraph SpatialGraph::from_edges(
    std::vector<std::string> labels,
    const std::vector<std::pair<std::string, std::string>>& edges) {
    SpatialGraph g;
    g.labels_ = std::move(labels);
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < g.labels_.size(); ++i)
        if (!pos.emplace(g.labels_[i], i).second)
            throw GraphError("duplicate node label '" + g.labels_[i] + "'");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& [a, b] : edges) {
        auto ia = pos.find(a), ib = pos.find(b);
        if (ia == pos.end()) throw GraphError("edge references unknown node '" + a + "'");
        if (ib == pos.end()) throw GraphError("edge references unknown node '" + b + "'");
        if (ia->second == ib->second) throw GraphError("self-loop at node '" + a + "'");
        seen.emplace(std::minmax(ia->second, ib->second));
    }
    g.edges_.assign(seen.begin(), seen.end());
    return g;
}

SpatialGraph SpatialGraph::path(std::vector<std::string> labels) {
    std::vector<std::pair<std::string, std::string>> edges;
    for (std::size_t i = 1; i < labels.size(); ++i) edges.emplace_back(labels[i - 1], labels[i]);
    return from_edges(std::move(labels), edges);
}

std::size_t SpatialGraph::index_of(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw GraphError("unknown node '" + label + "'");
    return static_cast<std::size_t>(it - labels_.begin());
}

Eigen::MatrixXd SpatialGraph::laplacian() const {
    const auto n = static_cast<Eigen::Index>(labels_.size());
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [a, b] : edges_) {
        const auto i = static_cast<Eigen::Index>(a), j = static_cast<Eigen::Index>(b);
        L(i, i) += 1.0;
        L(j, j) += 1.0;
        L(i, j) -= 1.0;
        L(j, i) -= 1.0;
    }
    return L;
}

PenaltyValue graph_penalty(std::span<const double> coefficients,
                           std::span<const std::string> labels, const PenaltySpec& spec) {
    if (coefficients.size() != labels.size())
        throw GraphError("graph_penalty: coefficient and label counts differ");
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < labels.size(); ++i) pos.emplace(labels[i], i);
    std::vector<std::size_t> node_to_coef;
    for (const auto& l : spec.graph.labels()) {
        auto it = pos.find(l);
        if (it == pos.end())
            throw GraphError("graph node '" + l + "' has no coefficient in factor '" +
                             spec.factor + "'");
        node_to_coef.push_back(it->second);
    }
    PenaltyValue out;
    out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(coefficients.size()));
    for (const auto& [a, b] : spec.graph.edges()) {
        const auto ia = node_to_coef[a], ib = node_to_coef[b];
        const double d = coefficients[ia] - coefficients[ib];
        out.value -= spec.weight * d * d;
        out.gradient(static_cast<Eigen::Index>(ia)) -= 2.0 * spec.weight * d;
        out.gradient(static_cast<Eigen::Index>(ib)) += 2.0 * spec.weight * d;
    }
    return out;
}

}  // namespace duprate::graph
