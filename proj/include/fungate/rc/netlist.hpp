#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fungate/colony/graph.hpp"
#include "fungate/error.hpp"

namespace fungate::rc {

using NodeId = colony::NodeId;

/// Per-unit-length electrical constants. R = rho * L, C = cap * L.
struct MaterialConstants {
    double rho = 50.0;     // ohm per um
    double cap = 0.05e-12; // farad per um
    double gmin = 1e-12;   // siemens, every node to ground

    void validate() const {
        if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("rho must be positive");
        if (!(cap > 0.0) || !std::isfinite(cap)) throw ConfigError("cap must be positive");
        if (!(gmin >= 0.0) || !std::isfinite(gmin)) throw ConfigError("gmin must be non-negative");
    }
};

enum class EdgeModel { Series, Parallel };

inline std::string to_string(EdgeModel m) { return m == EdgeModel::Series ? "series" : "parallel"; }

inline EdgeModel edge_model_from_string(const std::string& s) {
    if (s == "series") return EdgeModel::Series;
    if (s == "parallel") return EdgeModel::Parallel;
    throw ConfigError("unknown edge model '" + s + "' (expected series or parallel)");
}

/**
 * Periodic trapezoidal pulse. Before t_delay and after n_cycles the value is
 * v_low; each cycle ramps up over t_rise, holds v_high for t_on, ramps down
 * over t_fall and holds v_low for t_off.
 */
struct PulseWaveform {
    double v_low = 0.0;
    double v_high = 0.06;
    double t_delay = 0.0;
    double t_rise = 1e-3;
    double t_fall = 1e-3;
    double t_on = 0.0;
    double t_off = 0.0;
    int n_cycles = 1;

    double period() const { return t_rise + t_on + t_fall + t_off; }

    void validate() const {
        if (!(t_rise > 0.0) || !(t_fall > 0.0)) throw ConfigError("pulse rise/fall must be positive");
        if (!(t_on >= 0.0) || !(t_off >= 0.0)) throw ConfigError("pulse on/off must be non-negative");
        if (!(t_delay >= 0.0)) throw ConfigError("pulse delay must be non-negative");
        if (!(v_high >= v_low)) throw ConfigError("pulse v_high must be >= v_low");
        if (n_cycles < 1) throw ConfigError("pulse n_cycles must be >= 1");
    }

    friend bool operator==(const PulseWaveform&, const PulseWaveform&) = default;
};

inline double waveform_value(const PulseWaveform& w, double t) {
    if (t < w.t_delay) return w.v_low;
    const double period = w.period();
    const double tau = t - w.t_delay;
    const double cycle = std::floor(tau / period);
    if (cycle >= static_cast<double>(w.n_cycles)) return w.v_low;
    double phase = tau - cycle * period;
    const double swing = w.v_high - w.v_low;
    if (phase < w.t_rise) return w.v_low + swing * (phase / w.t_rise);
    phase -= w.t_rise;
    if (phase < w.t_on) return w.v_high;
    phase -= w.t_on;
    if (phase < w.t_fall) return w.v_high - swing * (phase / w.t_fall);
    return w.v_low;
}

/// 60 mV inputs. V1 uses a 10 s off-time so the four 10 s epochs of a 40 s
/// run present (0,0), (1,0), (0,1), (1,1).
inline PulseWaveform default_v1() { return {0.0, 0.06, 10.0, 1e-3, 1e-3, 10.0, 10.0, 2}; }
inline PulseWaveform default_v2() { return {0.0, 0.06, 20.0, 1e-3, 1e-3, 20.0, 20.0, 1}; }

/// Literal published V1 timing (20 s off-time); never reaches (1,1) inside 40 s.
inline PulseWaveform literal_v1() { return {0.0, 0.06, 10.0, 1e-3, 1e-3, 10.0, 20.0, 2}; }
inline PulseWaveform literal_v2() { return default_v2(); }

struct Resistor {
    NodeId n1 = 0;
    NodeId n2 = 0;
    double ohms = 0.0;
    friend bool operator==(const Resistor&, const Resistor&) = default;
};

struct Capacitor {
    NodeId n1 = 0;
    NodeId n2 = 0;
    double farads = 0.0;
    friend bool operator==(const Capacitor&, const Capacitor&) = default;
};

/// Ideal source from `node` (+) to the global ground (-).
struct VSource {
    NodeId node = 0;
    PulseWaveform waveform;
    friend bool operator==(const VSource&, const VSource&) = default;
};

using Component = std::variant<Resistor, Capacitor, VSource>;

/// Where a netlist node came from: a graph node, or the internal node of a
/// series-model edge.
struct NodeOrigin {
    enum class Kind { GraphNode, EdgeInternal };
    Kind kind = Kind::GraphNode;
    std::size_t index = 0; // graph node id or edge index
    friend bool operator==(const NodeOrigin&, const NodeOrigin&) = default;
};

struct Netlist {
    std::vector<Component> components;
    NodeId ground = 0;
    std::size_t node_count = 0;
    std::vector<NodeOrigin> labels; // indexed by node id
    double gmin = 0.0;

    /// One leak per node when gmin > 0 (the ground node's is degenerate).
    std::size_t leak_count() const { return gmin > 0.0 ? node_count : 0; }

    template <typename T>
    std::size_t count() const {
        return static_cast<std::size_t>(std::count_if(components.begin(), components.end(),
                                                      [](const Component& c) { return std::holds_alternative<T>(c); }));
    }
};

/// Hands out consecutive node ids for edge-internal nodes.
class NodeAllocator {
public:
    explicit NodeAllocator(NodeId first) : next_(first) {}
    NodeId allocate() { return next_++; }
    NodeId next() const { return next_; }

private:
    NodeId next_;
};

inline std::vector<Component> edge_to_components(NodeId u, NodeId v, double length, EdgeModel model,
                                                 const MaterialConstants& k, NodeAllocator& fresh) {
    if (!(length > 0.0) || !std::isfinite(length))
        throw DataError("edge_to_components: length must be positive");
    const double ohms = k.rho * length;
    const double farads = k.cap * length;
    if (model == EdgeModel::Parallel) return {Resistor{u, v, ohms}, Capacitor{u, v, farads}};
    const NodeId mid = fresh.allocate();
    return {Resistor{u, mid, ohms}, Capacitor{mid, v, farads}};
}

struct SourceSpec {
    NodeId node = 0;
    PulseWaveform waveform;
};

/**
 * Expands every graph edge under `model`, attaches the sources at their
 * graph nodes, and uses `gnd` as the reference. Graph nodes keep their ids;
 * series-model internal nodes follow as |V| + edge index.
 */
inline Netlist build_netlist(const colony::EuclideanGraph& g, EdgeModel model, const MaterialConstants& k,
                             std::span<const SourceSpec> sources, NodeId gnd) {
    k.validate();
    if (!g.contains(gnd)) throw DataError("ground node " + std::to_string(gnd) + " is not in the graph");
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const NodeId n = sources[i].node;
        if (!g.contains(n)) throw DataError("source node " + std::to_string(n) + " is not in the graph");
        if (n == gnd) throw DataError("source node coincides with ground");
        for (std::size_t j = 0; j < i; ++j) {
            if (sources[j].node == n) throw DataError("two sources share node " + std::to_string(n));
        }
        sources[i].waveform.validate();
    }

    Netlist net;
    net.ground = gnd;
    net.gmin = k.gmin;
    for (NodeId i = 0; i < g.node_count(); ++i)
        net.labels.push_back({NodeOrigin::Kind::GraphNode, i});

    NodeAllocator fresh(static_cast<NodeId>(g.node_count()));
    net.components.reserve(2 * g.edge_count() + sources.size());
    for (std::size_t ei = 0; ei < g.edge_count(); ++ei) {
        const colony::Edge& e = g.edges()[ei];
        const NodeId before = fresh.next();
        for (auto& c : edge_to_components(e.u, e.v, e.length, model, k, fresh))
            net.components.push_back(std::move(c));
        for (NodeId n = before; n < fresh.next(); ++n)
            net.labels.push_back({NodeOrigin::Kind::EdgeInternal, ei});
    }
    for (const SourceSpec& s : sources) net.components.push_back(VSource{s.node, s.waveform});
    net.node_count = fresh.next();
    return net;
}

inline Netlist build_netlist(const colony::EuclideanGraph& g, EdgeModel model, const MaterialConstants& k,
                             NodeId v1, NodeId v2, NodeId gnd, const PulseWaveform& w1,
                             const PulseWaveform& w2) {
    if (v1 == v2 || v1 == gnd || v2 == gnd) throw DataError("v1, v2 and gnd must be distinct");
    const SourceSpec sources[] = {{v1, w1}, {v2, w2}};
    return build_netlist(g, model, k, sources, gnd);
}

/// Checks the component invariants of a netlist that did not come from
/// build_netlist (e.g. one read from a SPICE file).
inline void validate_netlist(const Netlist& n) {
    if (n.node_count > 0 && n.ground >= n.node_count) throw DataError("netlist ground out of range");
    std::vector<char> driven(n.node_count, 0);
    for (std::size_t i = 0; i < n.components.size(); ++i) {
        const std::string where = "component " + std::to_string(i);
        std::visit(
            [&](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, VSource>) {
                    if (c.node >= n.node_count) throw DataError(where + ": node out of range");
                    if (c.node == n.ground) throw DataError(where + ": source on ground");
                    if (driven[c.node]) throw DataError(where + ": node already driven by a source");
                    driven[c.node] = 1;
                    c.waveform.validate();
                } else {
                    if (c.n1 >= n.node_count || c.n2 >= n.node_count)
                        throw DataError(where + ": node out of range");
                    if (c.n1 == c.n2) throw DataError(where + ": both terminals on one node");
                    if constexpr (std::is_same_v<T, Resistor>) {
                        if (!(c.ohms > 0.0)) throw DataError(where + ": resistance must be positive");
                    } else {
                        if (!(c.farads > 0.0)) throw DataError(where + ": capacitance must be positive");
                    }
                }
            },
            n.components[i]);
    }
}

} // namespace fungate::rc
