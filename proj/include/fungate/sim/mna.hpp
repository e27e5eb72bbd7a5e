#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "fungate/error.hpp"
#include "fungate/rc/netlist.hpp"
#include "fungate/sim/solver_config.hpp"

namespace fungate::sim {

using rc::NodeId;

/// Companion conductance of a capacitor for one integration step.
inline double companion_conductance(double farads, double dt, Integration method) {
    return method == Integration::Trapezoidal ? 2.0 * farads / dt : farads / dt;
}

/**
 * Modified nodal analysis system for a linear RC netlist at fixed dt.
 *
 * Unknowns are the non-ground node voltages (in node-id order) followed by
 * one branch current per voltage source. The matrix holds resistor
 * conductances, capacitor companion conductances, gmin leaks and the
 * source incidence rows/columns; it does not change between steps.
 */
struct MnaSystem {
    static constexpr int ground_index = -1;

    std::size_t dimension = 0;
    std::size_t node_unknowns = 0;
    Eigen::SparseMatrix<double> matrix;
    std::vector<int> node_index;           // node id -> unknown index (ground -> -1)
    std::vector<std::size_t> source_index; // source ordinal -> unknown index
    std::vector<std::size_t> source_component; // source ordinal -> component index
    double dt = 0.0;
    Integration method = Integration::Trapezoidal;
};

/// Nodes with no path to ground or to a source node through any element or
/// leak. Empty means the MNA matrix is nonsingular.
inline std::vector<NodeId> isolated_nodes(const rc::Netlist& n) {
    if (n.node_count == 0 || n.gmin > 0.0) return {};
    std::vector<std::vector<NodeId>> adj(n.node_count);
    std::vector<char> reached(n.node_count, 0);
    std::vector<NodeId> stack;
    auto seed = [&](NodeId id) {
        if (!reached[id]) {
            reached[id] = 1;
            stack.push_back(id);
        }
    };
    seed(n.ground);
    for (const auto& c : n.components) {
        if (const auto* r = std::get_if<rc::Resistor>(&c)) {
            adj[r->n1].push_back(r->n2);
            adj[r->n2].push_back(r->n1);
        } else if (const auto* cap = std::get_if<rc::Capacitor>(&c)) {
            adj[cap->n1].push_back(cap->n2);
            adj[cap->n2].push_back(cap->n1);
        } else {
            seed(std::get<rc::VSource>(c).node);
        }
    }
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        for (NodeId m : adj[id]) seed(m);
    }
    std::vector<NodeId> out;
    for (NodeId i = 0; i < n.node_count; ++i) {
        if (!reached[i]) out.push_back(i);
    }
    return out;
}

inline std::string describe_nodes(const std::vector<NodeId>& nodes) {
    std::string s = "{";
    for (std::size_t i = 0; i < nodes.size() && i < 20; ++i) s += (i ? ", " : "") + std::to_string(nodes[i]);
    if (nodes.size() > 20) s += ", ... (" + std::to_string(nodes.size()) + " nodes)";
    return s + "}";
}

inline MnaSystem assemble(const rc::Netlist& n, const SolverConfig& cfg) {
    cfg.validate();
    rc::validate_netlist(n);
    if (const auto iso = isolated_nodes(n); !iso.empty())
        throw NumericalError("singular MNA system: nodes " + describe_nodes(iso) +
                             " have no conductive path to ground");

    MnaSystem sys;
    sys.dt = cfg.dt;
    sys.method = cfg.method;
    sys.node_index.assign(n.node_count, MnaSystem::ground_index);
    int next = 0;
    for (NodeId i = 0; i < n.node_count; ++i) {
        if (i != n.ground) sys.node_index[i] = next++;
    }
    sys.node_unknowns = static_cast<std::size_t>(next);
    for (std::size_t ci = 0; ci < n.components.size(); ++ci) {
        if (std::holds_alternative<rc::VSource>(n.components[ci])) {
            sys.source_index.push_back(static_cast<std::size_t>(next++));
            sys.source_component.push_back(ci);
        }
    }
    sys.dimension = static_cast<std::size_t>(next);

    std::vector<Eigen::Triplet<double>> t;
    t.reserve(4 * n.components.size() + n.node_count);
    auto stamp = [&](NodeId a, NodeId b, double g) {
        const int ia = sys.node_index[a];
        const int ib = sys.node_index[b];
        if (ia >= 0) t.emplace_back(ia, ia, g);
        if (ib >= 0) t.emplace_back(ib, ib, g);
        if (ia >= 0 && ib >= 0) {
            t.emplace_back(ia, ib, -g);
            t.emplace_back(ib, ia, -g);
        }
    };
    std::size_t source = 0;
    for (const auto& c : n.components) {
        if (const auto* r = std::get_if<rc::Resistor>(&c)) {
            stamp(r->n1, r->n2, 1.0 / r->ohms);
        } else if (const auto* cap = std::get_if<rc::Capacitor>(&c)) {
            stamp(cap->n1, cap->n2, companion_conductance(cap->farads, cfg.dt, cfg.method));
        } else {
            const int row = sys.node_index[std::get<rc::VSource>(c).node];
            const auto col = static_cast<int>(sys.source_index[source++]);
            t.emplace_back(row, col, 1.0);
            t.emplace_back(col, row, 1.0);
        }
    }
    if (n.gmin > 0.0) {
        for (NodeId i = 0; i < n.node_count; ++i) {
            if (sys.node_index[i] >= 0) t.emplace_back(sys.node_index[i], sys.node_index[i], n.gmin);
        }
    }
    sys.matrix.resize(static_cast<Eigen::Index>(sys.dimension), static_cast<Eigen::Index>(sys.dimension));
    sys.matrix.setFromTriplets(t.begin(), t.end());
    sys.matrix.makeCompressed();
    return sys;
}

} // namespace fungate::sim
