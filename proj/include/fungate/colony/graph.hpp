#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "fungate/error.hpp"

namespace fungate::colony {

using NodeId = std::uint32_t;

/// Position in micrometres.
struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
    friend bool operator==(const Point3&, const Point3&) = default;
};

inline double distance(const Point3& a, const Point3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Skeleton path between two nodes; `length` in micrometres.
struct Edge {
    NodeId u = 0;
    NodeId v = 0;
    double length = 0.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

/**
 * Weighted spatial multigraph of hyphal segments.
 *
 * Node ids are dense (0..node_count-1). The structural invariants (endpoints
 * exist, no self-loops, finite coordinates, strictly positive lengths) are
 * enforced on construction; instances are immutable afterwards.
 */
class EuclideanGraph {
public:
    EuclideanGraph() = default;

    EuclideanGraph(std::vector<Point3> nodes, std::vector<Edge> edges)
        : nodes_(std::move(nodes)), edges_(std::move(edges)) {
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (!nodes_[i].finite())
                throw DataError("node " + std::to_string(i) + " has non-finite coordinates");
        }
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            const Edge& e = edges_[i];
            if (e.u >= nodes_.size() || e.v >= nodes_.size())
                throw DataError("edge " + std::to_string(i) + " references an unknown node");
            if (e.u == e.v)
                throw DataError("edge " + std::to_string(i) + " is a self-loop");
            if (!(e.length > 0.0) || !std::isfinite(e.length))
                throw DataError("edge " + std::to_string(i) + " has non-positive length");
        }
        degree_.assign(nodes_.size(), 0);
        for (const Edge& e : edges_) {
            ++degree_[e.u];
            ++degree_[e.v];
        }
    }

    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<Point3>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Point3& point(NodeId id) const { return nodes_.at(id); }
    bool contains(NodeId id) const { return id < nodes_.size(); }
    std::size_t degree(NodeId id) const { return degree_.at(id); }

    /// Incident (neighbour, edge index) pairs per node.
    std::vector<std::vector<std::pair<NodeId, std::size_t>>> adjacency() const {
        std::vector<std::vector<std::pair<NodeId, std::size_t>>> adj(nodes_.size());
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            adj[edges_[i].u].emplace_back(edges_[i].v, i);
            adj[edges_[i].v].emplace_back(edges_[i].u, i);
        }
        return adj;
    }

    friend bool operator==(const EuclideanGraph& a, const EuclideanGraph& b) {
        return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
    }

private:
    std::vector<Point3> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::size_t> degree_;
};

/// Edges whose length is shorter than the endpoint chord minus `tolerance`.
inline std::vector<std::size_t> chord_violations(const EuclideanGraph& g, double tolerance) {
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < g.edge_count(); ++i) {
        const Edge& e = g.edges()[i];
        if (e.length < distance(g.point(e.u), g.point(e.v)) - tolerance) bad.push_back(i);
    }
    return bad;
}

/// Degree-1 nodes, ascending.
inline std::vector<NodeId> terminals(const EuclideanGraph& g) {
    std::vector<NodeId> out;
    for (NodeId i = 0; i < g.node_count(); ++i) {
        if (g.degree(i) == 1) out.push_back(i);
    }
    return out;
}

/// Connected components, largest first (ties: smallest member id first).
/// Each component lists its nodes in ascending order.
inline std::vector<std::vector<NodeId>> components(const EuclideanGraph& g) {
    const auto adj = g.adjacency();
    std::vector<char> seen(g.node_count(), 0);
    std::vector<std::vector<NodeId>> out;
    for (NodeId start = 0; start < g.node_count(); ++start) {
        if (seen[start]) continue;
        std::vector<NodeId> comp;
        std::vector<NodeId> stack{start};
        seen[start] = 1;
        while (!stack.empty()) {
            const NodeId n = stack.back();
            stack.pop_back();
            comp.push_back(n);
            for (const auto& [m, _] : adj[n]) {
                if (!seen[m]) {
                    seen[m] = 1;
                    stack.push_back(m);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.size() > b.size(); });
    return out;
}

struct WeightedPath {
    std::vector<NodeId> nodes;
    double length = 0.0;
};

/// Dijkstra over edge lengths. Empty optional when source and sink are
/// disconnected.
inline std::optional<WeightedPath> shortest_weighted_path(const EuclideanGraph& g, NodeId source,
                                                          NodeId sink) {
    if (!g.contains(source) || !g.contains(sink))
        throw DataError("shortest_weighted_path: unknown node id");

    const auto adj = g.adjacency();
    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr NodeId none = std::numeric_limits<NodeId>::max();
    std::vector<double> dist(g.node_count(), inf);
    std::vector<NodeId> prev(g.node_count(), none);
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;

    dist[source] = 0.0;
    queue.emplace(0.0, source);
    while (!queue.empty()) {
        const auto [d, n] = queue.top();
        queue.pop();
        if (d > dist[n]) continue;
        if (n == sink) break;
        for (const auto& [m, ei] : adj[n]) {
            const double nd = d + g.edges()[ei].length;
            if (nd < dist[m]) {
                dist[m] = nd;
                prev[m] = n;
                queue.emplace(nd, m);
            }
        }
    }
    if (dist[sink] == inf) return std::nullopt;

    WeightedPath path;
    path.length = dist[sink];
    for (NodeId n = sink; n != none; n = prev[n]) path.nodes.push_back(n);
    std::reverse(path.nodes.begin(), path.nodes.end());
    return path;
}

struct GraphStats {
    std::size_t node_count = 0;
    std::size_t edge_count = 0;
    std::size_t terminal_count = 0;
    std::size_t component_count = 0;
    double total_length = 0.0;
    std::map<std::size_t, std::size_t> degree_histogram; // degree -> node count

    friend bool operator==(const GraphStats&, const GraphStats&) = default;
};

inline GraphStats graph_stats(const EuclideanGraph& g) {
    GraphStats s;
    s.node_count = g.node_count();
    s.edge_count = g.edge_count();
    s.component_count = components(g).size();
    for (const Edge& e : g.edges()) s.total_length += e.length;
    for (NodeId i = 0; i < g.node_count(); ++i) ++s.degree_histogram[g.degree(i)];
    auto it = s.degree_histogram.find(1);
    s.terminal_count = it == s.degree_histogram.end() ? 0 : it->second;
    return s;
}

inline std::string format_stats(const GraphStats& s) {
    std::string out;
    out += "nodes: " + std::to_string(s.node_count) + "\n";
    out += "edges: " + std::to_string(s.edge_count) + "\n";
    out += "terminals: " + std::to_string(s.terminal_count) + "\n";
    out += "components: " + std::to_string(s.component_count) + "\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", s.total_length);
    out += "total_length_um: " + std::string(buf) + "\n";
    out += "degree_histogram:";
    for (const auto& [deg, count] : s.degree_histogram)
        out += " " + std::to_string(deg) + ":" + std::to_string(count);
    out += "\n";
    return out;
}

} // namespace fungate::colony
