#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "fungate/error.hpp"
#include "fungate/format.hpp"
#include "fungate/rc/netlist.hpp"
#include "fungate/sim/mna.hpp"
#include "fungate/sim/solver_config.hpp"

namespace fungate::sim {

/**
 * Fixed-step transient solver for one netlist.
 *
 * Source rows of the MNA system pin their nodes to the waveform value, so
 * the remaining node block (symmetric positive definite: conductances,
 * companion conductances, leaks) is factored once with a sparse LDL^T and
 * every step is a right-hand-side rebuild plus two triangular solves.
 * Source branch currents are recovered afterwards from KCL at the driven
 * node. Not thread-safe; use one instance per worker.
 */
class TransientSolver {
public:
    TransientSolver(const rc::Netlist& n, const SolverConfig& cfg)
        : cfg_(cfg), system_(assemble(n, cfg)), node_count_(n.node_count),
          component_count_(n.components.size()), gmin_(n.gmin) {
        setup(n);
        reset();
    }

    const MnaSystem& system() const { return system_; }
    const SolverConfig& config() const { return cfg_; }
    std::size_t step_index() const { return step_; }
    double time() const { return cfg_.time_at(step_); }
    std::size_t node_count() const { return node_count_; }
    std::size_t component_count() const { return component_count_; }

    /// Node voltages at the current step, indexed by node id (ground = 0).
    std::span<const double> node_voltages() const { return v_; }

    /// Zero state: capacitors discharged, source nodes at their t = 0 value.
    void reset() {
        step_ = 0;
        std::fill(v_.begin(), v_.end(), 0.0);
        for (const auto& s : sources_) v_[s.node] = rc::waveform_value(s.waveform, 0.0);
        for (auto& c : caps_) {
            c.voltage = v_[c.n1] - v_[c.n2];
            c.current = 0.0;
        }
    }

    void advance() {
        const std::size_t k = step_ + 1;
        const double t = cfg_.time_at(k);
        std::fill(rhs_.data(), rhs_.data() + rhs_.size(), 0.0);

        const bool trap = cfg_.method == Integration::Trapezoidal;
        for (auto& c : caps_) {
            c.history = trap ? c.geq * c.voltage + c.current : c.geq * c.voltage;
            if (c.f1 >= 0) rhs_[c.f1] += c.history;
            if (c.f2 >= 0) rhs_[c.f2] -= c.history;
        }
        for (std::size_t s = 0; s < sources_.size(); ++s) {
            source_values_[s] = rc::waveform_value(sources_[s].waveform, t);
            v_[sources_[s].node] = source_values_[s];
        }
        for (const auto& c : coupling_) rhs_[c.row] -= c.value * source_values_[c.source];

        if (free_nodes_.size() > 0) {
            x_ = ldlt_.solve(rhs_);
            for (std::size_t i = 0; i < free_nodes_.size(); ++i) v_[free_nodes_[i]] = x_[static_cast<Eigen::Index>(i)];
        }
        for (auto& c : caps_) {
            c.voltage = v_[c.n1] - v_[c.n2];
            c.current = c.geq * c.voltage - c.history;
        }
        step_ = k;
    }

    /// Current through every component at the current step, in component
    /// order: resistors and capacitors n1 -> n2, sources as the current
    /// delivered into their node.
    void component_currents(std::span<double> out) const {
        std::fill(outflow_.begin(), outflow_.end(), 0.0);
        for (const auto& r : resistors_) {
            const double i = (v_[r.n1] - v_[r.n2]) * r.g;
            out[r.component] = i;
            outflow_[r.n1] += i;
            outflow_[r.n2] -= i;
        }
        for (const auto& c : caps_) {
            out[c.component] = c.current;
            outflow_[c.n1] += c.current;
            outflow_[c.n2] -= c.current;
        }
        for (const auto& s : sources_) out[s.component] = outflow_[s.node] + gmin_ * v_[s.node];
    }

private:
    struct ResistorSlot {
        NodeId n1, n2;
        double g;
        std::size_t component;
    };
    struct CapacitorSlot {
        NodeId n1, n2;
        int f1, f2; // free-node row or -1
        double geq;
        std::size_t component;
        double voltage = 0.0;
        double current = 0.0;
        double history = 0.0;
    };
    struct SourceSlot {
        NodeId node;
        rc::PulseWaveform waveform;
        std::size_t component;
    };
    struct Coupling {
        int row;
        std::size_t source;
        double value;
    };

    void setup(const rc::Netlist& n) {
        std::vector<int> driven(node_count_, -1);
        for (std::size_t ci = 0; ci < n.components.size(); ++ci) {
            if (const auto* s = std::get_if<rc::VSource>(&n.components[ci])) {
                driven[s->node] = static_cast<int>(sources_.size());
                sources_.push_back({s->node, s->waveform, ci});
            }
        }
        source_values_.assign(sources_.size(), 0.0);

        // unknown index -> node id, then free-node numbering
        std::vector<NodeId> unknown_node(system_.node_unknowns);
        for (NodeId i = 0; i < node_count_; ++i) {
            if (system_.node_index[i] >= 0) unknown_node[system_.node_index[i]] = i;
        }
        std::vector<int> free_row(system_.node_unknowns, -1);
        for (std::size_t u = 0; u < system_.node_unknowns; ++u) {
            if (driven[unknown_node[u]] < 0) {
                free_row[u] = static_cast<int>(free_nodes_.size());
                free_nodes_.push_back(unknown_node[u]);
            }
        }

        const auto nu = static_cast<Eigen::Index>(system_.node_unknowns);
        std::vector<Eigen::Triplet<double>> block;
        for (Eigen::Index col = 0; col < system_.matrix.outerSize(); ++col) {
            for (Eigen::SparseMatrix<double>::InnerIterator it(system_.matrix, col); it; ++it) {
                if (it.row() >= nu || it.col() >= nu) continue;
                const int r = free_row[it.row()];
                if (r < 0) continue;
                const int c = free_row[it.col()];
                if (c >= 0) {
                    if (c <= r) block.emplace_back(r, c, it.value());
                } else {
                    coupling_.push_back({r, static_cast<std::size_t>(driven[unknown_node[it.col()]]), it.value()});
                }
            }
        }

        const auto nf = static_cast<Eigen::Index>(free_nodes_.size());
        rhs_ = Eigen::VectorXd::Zero(nf);
        x_ = Eigen::VectorXd::Zero(nf);
        if (nf > 0) {
            Eigen::SparseMatrix<double> a(nf, nf);
            a.setFromTriplets(block.begin(), block.end());
            ldlt_.compute(a);
            if (ldlt_.info() != Eigen::Success || (ldlt_.vectorD().array() <= 0.0).any())
                throw NumericalError("factorization of the MNA node block failed");
        }

        for (std::size_t ci = 0; ci < n.components.size(); ++ci) {
            if (const auto* r = std::get_if<rc::Resistor>(&n.components[ci])) {
                resistors_.push_back({r->n1, r->n2, 1.0 / r->ohms, ci});
            } else if (const auto* c = std::get_if<rc::Capacitor>(&n.components[ci])) {
                auto row = [&](NodeId id) {
                    const int u = system_.node_index[id];
                    return u < 0 ? -1 : free_row[u];
                };
                caps_.push_back({c->n1, c->n2, row(c->n1), row(c->n2),
                                 companion_conductance(c->farads, cfg_.dt, cfg_.method), ci});
            }
        }
        v_.assign(node_count_, 0.0);
        outflow_.assign(node_count_, 0.0);
    }

    SolverConfig cfg_;
    MnaSystem system_;
    std::size_t node_count_;
    std::size_t component_count_;
    double gmin_;

    std::vector<ResistorSlot> resistors_;
    std::vector<CapacitorSlot> caps_;
    std::vector<SourceSlot> sources_;
    std::vector<Coupling> coupling_;
    std::vector<NodeId> free_nodes_;
    std::vector<double> source_values_;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
    Eigen::VectorXd rhs_;
    Eigen::VectorXd x_;
    std::vector<double> v_;
    mutable std::vector<double> outflow_;
    std::size_t step_ = 0;
};

/// Recorded node voltages and component currents, row-major by time step.
struct TransientResult {
    double dt = 0.0;          // spacing between recorded rows
    double t_stop = 0.0;
    NodeId ground = 0;
    std::size_t node_count = 0;
    std::size_t component_count = 0;
    std::vector<double> times;
    std::vector<double> node_voltages; // times.size() x node_count
    std::vector<double> edge_currents; // times.size() x component_count

    std::size_t samples() const { return times.size(); }
    double voltage(std::size_t k, NodeId node) const { return node_voltages[k * node_count + node]; }
    double current(std::size_t k, std::size_t component) const {
        return edge_currents[k * component_count + component];
    }
    std::span<const double> voltages_at(std::size_t k) const {
        return {node_voltages.data() + k * node_count, node_count};
    }
    std::span<const double> currents_at(std::size_t k) const {
        return {edge_currents.data() + k * component_count, component_count};
    }
};

/// Runs from t = 0 to t_stop, keeping every `record_stride`-th step.
inline TransientResult run_transient(const rc::Netlist& n, const SolverConfig& cfg) {
    TransientSolver solver(n, cfg);
    TransientResult r;
    r.dt = cfg.dt * static_cast<double>(cfg.record_stride);
    r.t_stop = cfg.t_stop;
    r.ground = n.ground;
    r.node_count = n.node_count;
    r.component_count = n.components.size();

    const std::size_t last = cfg.last_step();
    const std::size_t rows = last / cfg.record_stride + 1;
    r.times.reserve(rows);
    r.node_voltages.reserve(rows * r.node_count);
    r.edge_currents.reserve(rows * r.component_count);
    std::vector<double> currents(r.component_count);

    auto record = [&] {
        r.times.push_back(solver.time());
        const auto v = solver.node_voltages();
        r.node_voltages.insert(r.node_voltages.end(), v.begin(), v.end());
        solver.component_currents(currents);
        r.edge_currents.insert(r.edge_currents.end(), currents.begin(), currents.end());
    };
    record();
    while (solver.step_index() < last) {
        solver.advance();
        if (solver.step_index() % cfg.record_stride == 0) record();
    }
    return r;
}

/// Index of the recorded row nearest to t; exact midpoints go to the
/// earlier row.
inline std::size_t nearest_row(const TransientResult& r, double t) {
    if (r.samples() == 0) throw DataError("probe: empty result");
    if (!(t >= 0.0) || t > r.t_stop + 1e-9 * r.dt) throw DataError("probe: time outside the simulated range");
    const double pos = t / r.dt;
    auto k = static_cast<std::size_t>(std::floor(pos));
    if (pos - static_cast<double>(k) > 0.5 + 1e-9) ++k;
    return std::min(k, r.samples() - 1);
}

inline double probe(const TransientResult& r, NodeId node, double t) {
    if (node >= r.node_count) throw DataError("probe: unknown node " + std::to_string(node));
    return r.voltage(nearest_row(r, t), node);
}

/**
 * Largest KCL imbalance at row `k` over nodes that are neither ground nor
 * source-driven: |sum of recorded component currents leaving the node +
 * gmin * v|.
 */
inline double kcl_residual(const rc::Netlist& n, const TransientResult& r, std::size_t k) {
    if (n.components.empty() || n.node_count == 0) return 0.0;
    if (k >= r.samples()) throw DataError("kcl_residual: row out of range");
    std::vector<double> sum(n.node_count, 0.0);
    std::vector<char> skip(n.node_count, 0);
    skip[n.ground] = 1;
    for (std::size_t ci = 0; ci < n.components.size(); ++ci) {
        const double i = r.current(k, ci);
        if (const auto* res = std::get_if<rc::Resistor>(&n.components[ci])) {
            sum[res->n1] += i;
            sum[res->n2] -= i;
        } else if (const auto* cap = std::get_if<rc::Capacitor>(&n.components[ci])) {
            sum[cap->n1] += i;
            sum[cap->n2] -= i;
        } else {
            skip[std::get<rc::VSource>(n.components[ci]).node] = 1;
        }
    }
    double worst = 0.0;
    for (NodeId i = 0; i < n.node_count; ++i) {
        if (skip[i]) continue;
        worst = std::max(worst, std::abs(sum[i] + n.gmin * r.voltage(k, i)));
    }
    return worst;
}

/// CSV `t,node_0,node_1,...` in volts, one row per recorded step.
inline void write_waveform_csv(const TransientResult& r, std::ostream& out) {
    out << "t";
    for (std::size_t i = 0; i < r.node_count; ++i) out << ",node_" << i;
    out << "\n";
    for (std::size_t k = 0; k < r.samples(); ++k) {
        out << shortest(r.times[k]);
        for (std::size_t i = 0; i < r.node_count; ++i) out << "," << shortest(r.voltage(k, i));
        out << "\n";
    }
}

} // namespace fungate::sim
