#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "fungate/colony/ingest.hpp"
#include "fungate/colony/synthetic.hpp"
#include "fungate/error.hpp"
#include "fungate/mining/miner.hpp"
#include "fungate/rc/netlist.hpp"
#include "fungate/sim/solver_config.hpp"

namespace fungate::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

struct BranchTableSource {
    fs::path path;
    colony::VoxelPitch pitch;
    double merge_tolerance = colony::default_merge_tolerance_um;
};

struct GraphJsonSource {
    fs::path path;
};

using GraphSource = std::variant<colony::SyntheticColonyParams, BranchTableSource, GraphJsonSource>;

struct ThetaRange {
    double min = 1e-4;
    double max = 0.05;
    double step = 1e-4;
};

/// Everything a `mine` run depends on. Defaults follow the published
/// protocol: 60 mV pulses, 40 s at 1 ms, theta 0.0001..0.05 V, 1000 trials.
struct RunConfig {
    GraphSource graph = colony::SyntheticColonyParams{};
    rc::EdgeModel edge_model = rc::EdgeModel::Series;
    rc::MaterialConstants material;
    rc::PulseWaveform v1 = rc::default_v1();
    rc::PulseWaveform v2 = rc::default_v2();
    sim::SolverConfig solver;
    mining::InputSchedule schedule = mining::default_schedule();
    std::size_t n_trials = 1000;
    std::uint64_t master_seed = 1;
    ThetaRange theta;
    std::size_t output_subset = 0;
    std::optional<fs::path> output_dir;

    void validate() const {
        material.validate();
        v1.validate();
        v2.validate();
        solver.validate();
        schedule.validate();
        mining::make_theta_grid(theta.min, theta.max, theta.step);
        if (const auto* p = std::get_if<colony::SyntheticColonyParams>(&graph)) p->validate();
        if (const auto* b = std::get_if<BranchTableSource>(&graph)) b->pitch.validate();
    }

    mining::MiningSetup setup() const {
        mining::MiningSetup s;
        s.model = edge_model;
        s.material = material;
        s.w1 = v1;
        s.w2 = v2;
        s.solver = solver;
        s.schedule = schedule;
        s.theta_grid = mining::make_theta_grid(theta.min, theta.max, theta.step);
        s.output_subset = output_subset;
        return s;
    }
};

namespace detail {

/// Reads `key` into `out` when present; rejects keys outside `allowed`.
class Reader {
public:
    Reader(const nlohmann::json& j, std::string where, std::set<std::string> allowed) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
        for (const auto& [k, _] : j_.items()) {
            if (!allowed.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
        }
    }

    template <typename T>
    void get(const char* key, T& out) const {
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(where_ + "." + key + ": wrong type");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }
    const nlohmann::json& at(const char* key) const { return j_.at(key); }

private:
    const nlohmann::json& j_;
    std::string where_;
};

inline json synthetic_to_json(const colony::SyntheticColonyParams& p) {
    return {{"seed", p.seed},
            {"n_tips_initial", p.n_tips_initial},
            {"step_length_mean", p.step_length_mean},
            {"step_length_sd", p.step_length_sd},
            {"branch_probability", p.branch_probability},
            {"max_steps", p.max_steps},
            {"bounding_radius", p.bounding_radius},
            {"anastomosis_radius", p.anastomosis_radius}};
}

inline colony::SyntheticColonyParams synthetic_from_json(const nlohmann::json& j) {
    colony::SyntheticColonyParams p;
    Reader r(j, "graph.synthetic",
             {"seed", "n_tips_initial", "step_length_mean", "step_length_sd", "branch_probability", "max_steps",
              "bounding_radius", "anastomosis_radius"});
    r.get("seed", p.seed);
    r.get("n_tips_initial", p.n_tips_initial);
    r.get("step_length_mean", p.step_length_mean);
    r.get("step_length_sd", p.step_length_sd);
    r.get("branch_probability", p.branch_probability);
    r.get("max_steps", p.max_steps);
    r.get("bounding_radius", p.bounding_radius);
    r.get("anastomosis_radius", p.anastomosis_radius);
    return p;
}

inline json pulse_to_json(const rc::PulseWaveform& w) {
    return {{"v_low", w.v_low},   {"v_high", w.v_high}, {"t_delay", w.t_delay}, {"t_rise", w.t_rise},
            {"t_fall", w.t_fall}, {"t_on", w.t_on},     {"t_off", w.t_off},     {"n_cycles", w.n_cycles}};
}

inline rc::PulseWaveform pulse_from_json(const nlohmann::json& j, rc::PulseWaveform w, const std::string& where) {
    Reader r(j, where, {"v_low", "v_high", "t_delay", "t_rise", "t_fall", "t_on", "t_off", "n_cycles"});
    r.get("v_low", w.v_low);
    r.get("v_high", w.v_high);
    r.get("t_delay", w.t_delay);
    r.get("t_rise", w.t_rise);
    r.get("t_fall", w.t_fall);
    r.get("t_on", w.t_on);
    r.get("t_off", w.t_off);
    r.get("n_cycles", w.n_cycles);
    return w;
}

inline fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path.lexically_normal() : (base / path).lexically_normal();
}

} // namespace detail

/// Effective configuration as JSON (every default filled in). Paths are
/// absolute so the dump can be re-run from anywhere.
inline json to_json(const RunConfig& c) {
    json j;
    if (const auto* p = std::get_if<colony::SyntheticColonyParams>(&c.graph)) {
        j["graph"] = {{"synthetic", detail::synthetic_to_json(*p)}};
    } else if (const auto* b = std::get_if<BranchTableSource>(&c.graph)) {
        j["graph"] = {{"branch_table",
                       {{"path", b->path.string()},
                        {"pitch", {{"dx", b->pitch.dx}, {"dy", b->pitch.dy}, {"dz", b->pitch.dz}}},
                        {"merge_tolerance", b->merge_tolerance}}}};
    } else {
        j["graph"] = {{"json", {{"path", std::get<GraphJsonSource>(c.graph).path.string()}}}};
    }
    j["edge_model"] = rc::to_string(c.edge_model);
    j["material"] = {{"rho", c.material.rho}, {"cap", c.material.cap}, {"gmin", c.material.gmin}};
    j["waveforms"] = {{"v1", detail::pulse_to_json(c.v1)}, {"v2", detail::pulse_to_json(c.v2)}};
    j["solver"] = {{"dt", c.solver.dt}, {"t_stop", c.solver.t_stop}, {"method", sim::to_string(c.solver.method)}};
    json epochs = json::array();
    for (const auto& e : c.schedule.epochs)
        epochs.push_back({{"t_start", e.t_start}, {"t_end", e.t_end}, {"x", e.x}, {"y", e.y}});
    j["schedule"] = {{"epochs", epochs}, {"sample_offset", c.schedule.sample_offset}};
    j["n_trials"] = c.n_trials;
    j["master_seed"] = c.master_seed;
    j["theta"] = {{"min", c.theta.min}, {"max", c.theta.max}, {"step", c.theta.step}};
    j["output_subset"] = c.output_subset;
    if (c.output_dir) j["output_dir"] = c.output_dir->string();
    return j;
}

/**
 * Overlays a config document on the defaults. Relative paths resolve
 * against `base_dir` (the config file's directory). A run manifest is also
 * accepted: its "effective_config" member is used.
 */
inline RunConfig config_from_json(const nlohmann::json& doc, const fs::path& base_dir) {
    const nlohmann::json& j = doc.contains("effective_config") ? doc.at("effective_config") : doc;
    detail::Reader top(j, "config",
                       {"graph", "edge_model", "material", "waveforms", "solver", "schedule", "n_trials",
                        "master_seed", "theta", "output_subset", "output_dir"});
    RunConfig c;

    if (top.has("graph")) {
        const auto& g = top.at("graph");
        detail::Reader gr(g, "graph", {"synthetic", "branch_table", "json"});
        if (g.size() != 1) throw ConfigError("graph: exactly one source (synthetic, branch_table or json) required");
        if (g.contains("synthetic")) {
            c.graph = detail::synthetic_from_json(g.at("synthetic"));
        } else if (g.contains("branch_table")) {
            const auto& b = g.at("branch_table");
            detail::Reader br(b, "graph.branch_table", {"path", "pitch", "merge_tolerance"});
            BranchTableSource src;
            std::string path;
            br.get("path", path);
            if (path.empty()) throw ConfigError("graph.branch_table.path is required");
            src.path = detail::resolve(base_dir, path);
            if (!br.has("pitch")) throw ConfigError("graph.branch_table.pitch is required (no default xy pitch)");
            detail::Reader pr(br.at("pitch"), "graph.branch_table.pitch", {"dx", "dy", "dz"});
            if (!pr.has("dx") || !pr.has("dy")) throw ConfigError("graph.branch_table.pitch needs dx and dy");
            src.pitch.dz = colony::default_slice_thickness_um;
            pr.get("dx", src.pitch.dx);
            pr.get("dy", src.pitch.dy);
            pr.get("dz", src.pitch.dz);
            br.get("merge_tolerance", src.merge_tolerance);
            c.graph = src;
        } else {
            detail::Reader jr(g.at("json"), "graph.json", {"path"});
            std::string path;
            jr.get("path", path);
            if (path.empty()) throw ConfigError("graph.json.path is required");
            c.graph = GraphJsonSource{detail::resolve(base_dir, path)};
        }
    }
    if (top.has("edge_model")) {
        std::string m;
        top.get("edge_model", m);
        c.edge_model = rc::edge_model_from_string(m);
    }
    if (top.has("material")) {
        detail::Reader r(top.at("material"), "material", {"rho", "cap", "gmin"});
        r.get("rho", c.material.rho);
        r.get("cap", c.material.cap);
        r.get("gmin", c.material.gmin);
    }
    if (top.has("waveforms")) {
        detail::Reader r(top.at("waveforms"), "waveforms", {"v1", "v2"});
        if (r.has("v1")) c.v1 = detail::pulse_from_json(r.at("v1"), c.v1, "waveforms.v1");
        if (r.has("v2")) c.v2 = detail::pulse_from_json(r.at("v2"), c.v2, "waveforms.v2");
    }
    if (top.has("solver")) {
        detail::Reader r(top.at("solver"), "solver", {"dt", "t_stop", "method"});
        r.get("dt", c.solver.dt);
        r.get("t_stop", c.solver.t_stop);
        if (r.has("method")) {
            std::string m;
            r.get("method", m);
            c.solver.method = sim::integration_from_string(m);
        }
    }
    if (top.has("schedule")) {
        detail::Reader r(top.at("schedule"), "schedule", {"epochs", "sample_offset"});
        r.get("sample_offset", c.schedule.sample_offset);
        if (r.has("epochs")) {
            const auto& e = r.at("epochs");
            if (!e.is_array() || e.size() != 4) throw ConfigError("schedule.epochs must list 4 epochs");
            for (std::size_t i = 0; i < 4; ++i) {
                detail::Reader er(e[i], "schedule.epochs[" + std::to_string(i) + "]", {"t_start", "t_end", "x", "y"});
                er.get("t_start", c.schedule.epochs[i].t_start);
                er.get("t_end", c.schedule.epochs[i].t_end);
                er.get("x", c.schedule.epochs[i].x);
                er.get("y", c.schedule.epochs[i].y);
            }
        }
    }
    top.get("n_trials", c.n_trials);
    top.get("master_seed", c.master_seed);
    if (top.has("theta")) {
        detail::Reader r(top.at("theta"), "theta", {"min", "max", "step"});
        r.get("min", c.theta.min);
        r.get("max", c.theta.max);
        r.get("step", c.theta.step);
    }
    top.get("output_subset", c.output_subset);
    if (top.has("output_dir")) {
        std::string d;
        top.get("output_dir", d);
        c.output_dir = detail::resolve(base_dir, d);
    }
    c.validate();
    return c;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline RunConfig load_config(const fs::path& path) {
    const std::string text = read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path.string() + "': " + e.what());
    }
    return config_from_json(doc, fs::absolute(path).parent_path());
}

/// Loads the graph named by the config.
inline colony::EuclideanGraph load_graph(const GraphSource& src) {
    if (const auto* p = std::get_if<colony::SyntheticColonyParams>(&src)) return colony::grow_synthetic_colony(*p);
    if (const auto* b = std::get_if<BranchTableSource>(&src)) {
        std::ifstream in(b->path);
        if (!in) throw ConfigError("cannot open branch table '" + b->path.string() + "'");
        return colony::parse_branch_table(in, b->pitch, b->merge_tolerance).graph;
    }
    return colony::read_graph_json(read_file(std::get<GraphJsonSource>(src).path)).graph;
}

} // namespace fungate::cli
