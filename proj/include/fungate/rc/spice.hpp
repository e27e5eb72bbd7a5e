#pragma once

#include <cctype>
#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fungate/colony/ingest.hpp"
#include "fungate/error.hpp"
#include "fungate/format.hpp"
#include "fungate/rc/netlist.hpp"
#include "fungate/sim/solver_config.hpp"

namespace fungate::rc {

/// SPICE node name: ground is "0", the node whose id is 0 takes the ground's
/// id, everything else keeps its id.
inline NodeId spice_node(const Netlist& n, NodeId id) {
    if (id == n.ground) return 0;
    if (id == 0) return n.ground;
    return id;
}

namespace detail {

/// Pulses whose train ends inside the analysis window need the optional
/// pulse-count field; otherwise the standard seven fields are exact.
inline std::string pulse_text(const PulseWaveform& w, double t_stop) {
    std::string s = "PULSE(" + shortest(w.v_low) + " " + shortest(w.v_high) + " " + shortest(w.t_delay) +
                    " " + shortest(w.t_rise) + " " + shortest(w.t_fall) + " " + shortest(w.t_on) + " " +
                    shortest(w.period());
    if (w.t_delay + w.n_cycles * w.period() < t_stop) s += " " + std::to_string(w.n_cycles);
    return s + ")";
}

} // namespace detail

/**
 * Writes the netlist as SPICE text. Leak conductance is expressed through
 * the `rshunt` option (a resistor from every node to ground), and the
 * header comment carries the node count, ground id and graph node count so
 * parse_spice can restore node ids and labels.
 */
inline std::string export_spice(const Netlist& n, const sim::SolverConfig& cfg = {}) {
    std::ostringstream out;
    out << "* fungate RC netlist\n";
    if (n.components.empty()) {
        out << ".end\n";
        return out.str();
    }
    std::size_t graph_nodes = 0;
    while (graph_nodes < n.labels.size() && n.labels[graph_nodes].kind == NodeOrigin::Kind::GraphNode)
        ++graph_nodes;
    out << "* nodes=" << n.node_count << " ground=" << n.ground << " graph_nodes=" << graph_nodes << "\n";

    std::size_t r = 0, c = 0, v = 0;
    for (const Component& comp : n.components) {
        if (const auto* res = std::get_if<Resistor>(&comp)) {
            out << "R" << ++r << " " << spice_node(n, res->n1) << " " << spice_node(n, res->n2) << " "
                << shortest(res->ohms) << "\n";
        } else if (const auto* cap = std::get_if<Capacitor>(&comp)) {
            out << "C" << ++c << " " << spice_node(n, cap->n1) << " " << spice_node(n, cap->n2) << " "
                << shortest(cap->farads) << "\n";
        } else {
            const auto& src = std::get<VSource>(comp);
            out << "V" << ++v << " " << spice_node(n, src.node) << " 0 "
                << detail::pulse_text(src.waveform, cfg.t_stop) << "\n";
        }
    }
    out << ".options method="
        << (cfg.method == sim::Integration::Trapezoidal ? "trap" : "gear maxord=1");
    if (n.gmin > 0.0) out << " rshunt=" << shortest(1.0 / n.gmin);
    out << "\n";
    out << ".tran " << shortest(cfg.dt) << " " << shortest(cfg.t_stop) << "\n";
    out << ".end\n";
    return out.str();
}

struct ParsedSpice {
    Netlist netlist;
    std::optional<sim::SolverConfig> tran;
};

namespace detail {

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

/// SPICE number with optional scale suffix (f p n u m k meg g t).
inline std::optional<double> spice_number(std::string_view text) {
    const std::string s = lower(text);
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr == begin) return std::nullopt;
    const std::string_view suffix(ptr, static_cast<std::size_t>(end - ptr));
    static const std::pair<std::string_view, double> scales[] = {
        {"meg", 1e6}, {"mil", 25.4e-6}, {"f", 1e-15}, {"p", 1e-12}, {"n", 1e-9}, {"u", 1e-6},
        {"m", 1e-3},  {"k", 1e3},       {"g", 1e9},   {"t", 1e12}};
    if (suffix.empty()) return value;
    for (const auto& [name, scale] : scales) {
        if (suffix.substr(0, name.size()) == name) return value * scale;
    }
    return value; // trailing unit letters such as "ohm" or "v"
}

inline std::vector<std::string> tokens(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (std::isspace(static_cast<unsigned char>(ch)) || ch == '(' || ch == ')' || ch == ',' || ch == '=') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
            if (ch == '=') out.emplace_back("=");
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

} // namespace detail

/**
 * Reads the subset of SPICE emitted by export_spice: R, C and PULSE V
 * elements between integer-named nodes, `.options rshunt/method`, `.tran`
 * and `.end`. Without the fungate header the ground is node 0 and names are
 * node ids. A seven-field PULSE gets enough cycles to cover the `.tran`
 * window.
 */
inline ParsedSpice parse_spice(std::istream& in) {
    struct RawElement {
        char kind;
        long a, b;
        double value;
        std::vector<double> pulse;
        std::size_t row;
    };
    std::vector<RawElement> elements;
    std::optional<std::size_t> header_nodes, header_ground, header_graph_nodes;
    double gmin = 0.0;
    std::optional<sim::SolverConfig> tran;
    sim::Integration method = sim::Integration::Trapezoidal;

    std::string line;
    std::size_t row = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++row;
        const auto trimmed = colony::detail::trim(line);
        if (first) {
            first = false;
            continue; // SPICE title line
        }
        if (trimmed.empty()) continue;
        if (trimmed.front() == '*') {
            const auto tok = detail::tokens(trimmed.substr(1));
            for (std::size_t i = 0; i + 2 < tok.size(); ++i) {
                if (tok[i + 1] != "=") continue;
                std::size_t value = 0;
                if (!colony::detail::parse_number(tok[i + 2], value)) continue;
                if (tok[i] == "nodes") header_nodes = value;
                if (tok[i] == "ground") header_ground = value;
                if (tok[i] == "graph_nodes") header_graph_nodes = value;
            }
            continue;
        }
        const auto tok = detail::tokens(trimmed);
        const std::string head = detail::lower(tok[0]);
        if (head == ".end") break;
        if (head == ".options" || head == ".option") {
            for (std::size_t i = 1; i + 2 < tok.size(); ++i) {
                if (tok[i + 1] != "=") continue;
                const std::string key = detail::lower(tok[i]);
                if (key == "rshunt") {
                    const auto r = detail::spice_number(tok[i + 2]);
                    if (!r || !(*r > 0.0)) throw ParseError(row, "bad rshunt value");
                    gmin = 1.0 / *r;
                } else if (key == "method") {
                    method = detail::lower(tok[i + 2]) == "trap" ? sim::Integration::Trapezoidal
                                                                 : sim::Integration::BackwardEuler;
                }
            }
            continue;
        }
        if (head == ".tran") {
            if (tok.size() < 3) throw ParseError(row, ".tran needs step and stop time");
            const auto dt = detail::spice_number(tok[1]);
            const auto stop = detail::spice_number(tok[2]);
            if (!dt || !stop) throw ParseError(row, "bad .tran values");
            tran = sim::SolverConfig{*dt, *stop};
            continue;
        }
        if (head.front() == '.') continue; // other dot-commands are ignored

        const char kind = head.front();
        if (kind != 'r' && kind != 'c' && kind != 'v')
            throw ParseError(row, "unsupported element '" + tok[0] + "'");
        if (tok.size() < 4) throw ParseError(row, "element needs two nodes and a value");
        RawElement el{kind, 0, 0, 0.0, {}, row};
        if (!colony::detail::parse_number(tok[1], el.a) || !colony::detail::parse_number(tok[2], el.b) ||
            el.a < 0 || el.b < 0)
            throw ParseError(row, "node names must be non-negative integers");
        if (kind == 'v') {
            if (detail::lower(tok[3]) != "pulse") throw ParseError(row, "only PULSE sources are supported");
            for (std::size_t i = 4; i < tok.size(); ++i) {
                const auto x = detail::spice_number(tok[i]);
                if (!x) throw ParseError(row, "bad PULSE field '" + tok[i] + "'");
                el.pulse.push_back(*x);
            }
            if (el.pulse.size() != 7 && el.pulse.size() != 8)
                throw ParseError(row, "PULSE needs 7 or 8 fields");
            if (el.b != 0) throw ParseError(row, "sources must be referenced to ground");
        } else {
            const auto x = detail::spice_number(tok[3]);
            if (!x) throw ParseError(row, "bad element value '" + tok[3] + "'");
            el.value = *x;
        }
        elements.push_back(std::move(el));
    }
    if (tran) tran->method = method;

    ParsedSpice parsed;
    Netlist& net = parsed.netlist;
    net.gmin = gmin;
    net.ground = static_cast<NodeId>(header_ground.value_or(0));
    std::size_t max_name = 0;
    for (const auto& el : elements) max_name = std::max({max_name, std::size_t(el.a), std::size_t(el.b)});
    net.node_count = elements.empty() ? header_nodes.value_or(0)
                                      : std::max(header_nodes.value_or(0), max_name + 1);
    if (!elements.empty() && net.ground >= net.node_count)
        throw DataError("netlist header ground id exceeds node count");

    auto node_of = [&](long name) -> NodeId {
        const auto id = static_cast<NodeId>(name);
        if (id == 0) return net.ground;
        if (id == net.ground) return 0;
        return id;
    };
    const double window = tran ? tran->t_stop : sim::SolverConfig{}.t_stop;
    for (const auto& el : elements) {
        if (el.kind == 'r') {
            net.components.push_back(Resistor{node_of(el.a), node_of(el.b), el.value});
        } else if (el.kind == 'c') {
            net.components.push_back(Capacitor{node_of(el.a), node_of(el.b), el.value});
        } else {
            const auto& f = el.pulse;
            PulseWaveform w{f[0], f[1], f[2], f[3], f[4], f[5], f[6] - f[3] - f[5] - f[4], 1};
            if (w.t_off < 0.0 && w.t_off > -1e-12 * f[6]) w.t_off = 0.0;
            if (f.size() == 8) {
                w.n_cycles = static_cast<int>(f[7]);
            } else {
                const double span = std::max(0.0, window - w.t_delay);
                w.n_cycles = std::max(1, static_cast<int>(std::ceil(span / f[6])));
            }
            try {
                w.validate();
            } catch (const ConfigError& e) {
                throw ParseError(el.row, e.what());
            }
            net.components.push_back(VSource{node_of(el.a), w});
        }
    }
    const std::size_t graph_nodes = header_graph_nodes.value_or(net.node_count);
    for (std::size_t i = 0; i < net.node_count; ++i) {
        if (i < graph_nodes)
            net.labels.push_back({NodeOrigin::Kind::GraphNode, i});
        else
            net.labels.push_back({NodeOrigin::Kind::EdgeInternal, i - graph_nodes});
    }
    validate_netlist(net);
    parsed.tran = tran;
    return parsed;
}

inline ParsedSpice parse_spice(const std::string& text) {
    std::istringstream in(text);
    return parse_spice(in);
}

} // namespace fungate::rc
