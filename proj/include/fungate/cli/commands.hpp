#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fungate/cli/config.hpp"
#include "fungate/cli/sha256.hpp"
#include "fungate/cli/svg_plot.hpp"
#include "fungate/colony/graph.hpp"
#include "fungate/colony/ingest.hpp"
#include "fungate/colony/synthetic.hpp"
#include "fungate/error.hpp"
#include "fungate/mining/census.hpp"
#include "fungate/mining/fit.hpp"
#include "fungate/mining/miner.hpp"
#include "fungate/rc/netlist.hpp"
#include "fungate/rc/spice.hpp"
#include "fungate/sim/transient.hpp"
#include "fungate/version.hpp"

namespace fungate::cli {

inline constexpr const char* output_dir_env = "FUNGATE_OUTPUT_DIR";

/**
 * Every file the CLI writes goes through here. Relative targets resolve
 * against the output directory; anything that would land outside it is
 * refused. Files are written to a temporary name and renamed into place.
 */
class OutputDir {
public:
    explicit OutputDir(fs::path dir) : root_(fs::weakly_canonical(fs::absolute(std::move(dir)))) {}

    const fs::path& root() const { return root_; }

    fs::path resolve(const fs::path& target) const {
        const fs::path p = fs::weakly_canonical(target.is_absolute() ? target : root_ / target);
        const fs::path rel = p.lexically_relative(root_);
        if (rel.empty() || *rel.begin() == ".." || rel == ".")
            throw ConfigError("refusing to write '" + p.string() + "' outside the output directory '" +
                              root_.string() + "'");
        return p;
    }

    /// Writes all files or none: on failure every file already placed is
    /// removed again.
    void write_all(const std::vector<std::pair<fs::path, std::string>>& files) const {
        std::vector<fs::path> placed, temps;
        try {
            for (const auto& [target, content] : files) {
                const fs::path path = resolve(target);
                fs::create_directories(path.parent_path());
                const fs::path tmp = path.string() + ".partial";
                temps.push_back(tmp);
                std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
                out << content;
                out.close();
                if (!out) throw DataError("failed writing '" + path.string() + "'");
            }
            for (std::size_t i = 0; i < files.size(); ++i) {
                const fs::path path = resolve(files[i].first);
                fs::rename(temps[i], path);
                placed.push_back(path);
            }
        } catch (...) {
            std::error_code ec;
            for (const auto& p : temps) fs::remove(p, ec);
            for (const auto& p : placed) fs::remove(p, ec);
            throw;
        }
    }

    void write(const fs::path& target, const std::string& content) const { write_all({{target, content}}); }

private:
    fs::path root_;
};

/// --out-dir, then the config's output_dir, then the environment, then cwd.
inline OutputDir pick_output_dir(const std::string& flag, const std::optional<fs::path>& from_config = {}) {
    if (!flag.empty()) return OutputDir(flag);
    if (from_config) return OutputDir(*from_config);
    if (const char* env = std::getenv(output_dir_env); env && *env) return OutputDir(env);
    return OutputDir(fs::current_path());
}

inline json stats_json(const colony::GraphStats& s) {
    json hist = json::object();
    for (const auto& [deg, n] : s.degree_histogram) hist[std::to_string(deg)] = n;
    return {{"nodes", s.node_count},           {"edges", s.edge_count},
            {"terminals", s.terminal_count},   {"components", s.component_count},
            {"total_length_um", s.total_length}, {"degree_histogram", hist}};
}

struct MineOutputs {
    std::string census_csv;
    std::string fits_csv;
    std::string manifest;
};

/// The full `mine` pipeline without touching the filesystem for output.
inline MineOutputs mine(const RunConfig& cfg, unsigned threads) {
    const colony::EuclideanGraph g = load_graph(cfg.graph);
    mining::MiningSetup setup = cfg.setup();
    setup.threads = threads;
    const auto terms = colony::terminals(g);
    const auto trials = mining::draw_trials(terms, cfg.n_trials, cfg.master_seed);
    const mining::GateCensus census = mining::run_assignments(g, setup, trials).census;
    const auto fits = census.output_site_count > 0 ? mining::fit_census(census) : std::vector<mining::GroupFit>{};

    MineOutputs o;
    o.census_csv = mining::census_to_csv(census);
    o.fits_csv = mining::fits_to_csv(fits);

    const json effective = to_json(cfg);
    json m;
    m["artifact"] = "fungate";
    m["version"] = version;
    m["config_sha256"] = sha256_hex(effective.dump());
    m["master_seed"] = cfg.master_seed;
    m["graph"] = stats_json(colony::graph_stats(g));
    m["trials"] = census.trial_count;
    m["classified_pairs"] = census.output_site_count;
    m["note"] = "each (trial, output site) pair is classified once at every theta; every census row sums to "
                "classified_pairs";
    m["outputs"] = {{"census.csv", sha256_hex(o.census_csv)}, {"fits.csv", sha256_hex(o.fits_csv)}};
    m["effective_config"] = effective;
    o.manifest = m.dump(2) + "\n";
    return o;
}

namespace detail {

inline colony::EuclideanGraph read_graph_file(const std::string& path) {
    if (!fs::exists(path)) throw ConfigError("no such file: '" + path + "'");
    return colony::read_graph_json(read_file(path)).graph;
}

inline mining::GateCensus read_census_file(const std::string& path) {
    if (!fs::exists(path)) throw ConfigError("no such file: '" + path + "'");
    std::ifstream in(path);
    return mining::census_from_csv(in);
}

} // namespace detail

/**
 * Entry point shared by the binary and the tests. Returns the process exit
 * code: 0 success, 1 usage or config error, 2 data error, 3 numerical failure.
 */
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Boolean gate mining on RC models of fungal colonies", "fungate"};
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);

    std::string out_dir;
    std::string out_path;

    // ingest
    auto* ingest = app.add_subcommand(
        "ingest", "Convert a skeleton branch table (CSV) into graph JSON; a graph JSON input is re-merged");
    std::string csv_path;
    colony::VoxelPitch pitch{0.0, 0.0, colony::default_slice_thickness_um};
    double merge_tol = colony::default_merge_tolerance_um;
    ingest->add_option("table", csv_path, "Branch table CSV or graph JSON")->required();
    ingest->add_option("--dx", pitch.dx, "Voxel pitch along x (um), required for CSV");
    ingest->add_option("--dy", pitch.dy, "Voxel pitch along y (um), required for CSV");
    ingest->add_option("--dz", pitch.dz, "Voxel pitch along z (um)")->capture_default_str();
    ingest->add_option("--merge-tolerance", merge_tol, "Endpoint merge tolerance (um)")->capture_default_str();
    ingest->add_option("-o,--output", out_path, "Graph JSON file")->required();
    ingest->add_option("--out-dir", out_dir, "Output directory");

    // synth
    auto* synth = app.add_subcommand("synth", "Grow a synthetic colony graph");
    colony::SyntheticColonyParams sp;
    synth->add_option("--seed", sp.seed)->capture_default_str();
    synth->add_option("--tips", sp.n_tips_initial, "Initial tips")->capture_default_str();
    synth->add_option("--branch-probability", sp.branch_probability)->capture_default_str();
    synth->add_option("--steps", sp.max_steps, "Growth rounds")->capture_default_str();
    synth->add_option("--step-mean", sp.step_length_mean)->capture_default_str();
    synth->add_option("--step-sd", sp.step_length_sd)->capture_default_str();
    synth->add_option("--radius", sp.bounding_radius, "Bounding sphere radius (um)")->capture_default_str();
    synth->add_option("--anastomosis-radius", sp.anastomosis_radius)->capture_default_str();
    synth->add_option("-o,--output", out_path, "Graph JSON file")->required();
    synth->add_option("--out-dir", out_dir, "Output directory");

    // netlist
    auto* netlist = app.add_subcommand("netlist", "Export a SPICE netlist for one terminal assignment");
    std::string graph_path, netlist_config, model_name = "series", method_name;
    long long nv1 = -1, nv2 = -1, ngnd = -1;
    std::optional<double> rho, cap, gmin, dt, t_stop;
    netlist->add_option("graph", graph_path, "Graph JSON")->required();
    netlist->add_option("--v1", nv1, "Node driven by V1")->required();
    netlist->add_option("--v2", nv2, "Node driven by V2 (omit for a single source)");
    netlist->add_option("--gnd", ngnd, "Ground node")->required();
    netlist->add_option("--model", model_name, "series or parallel")->capture_default_str();
    netlist->add_option("--config", netlist_config, "Run config supplying material, waveforms and solver");
    netlist->add_option("--rho", rho);
    netlist->add_option("--cap", cap);
    netlist->add_option("--gmin", gmin);
    netlist->add_option("--dt", dt);
    netlist->add_option("--t-stop", t_stop);
    netlist->add_option("--method", method_name, "trapezoidal or backward_euler");
    netlist->add_option("-o,--output", out_path, "SPICE file")->required();
    netlist->add_option("--out-dir", out_dir, "Output directory");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Run a transient analysis of a SPICE netlist");
    std::string spice_path;
    std::size_t stride = 1;
    simulate->add_option("netlist", spice_path, "SPICE file")->required();
    simulate->add_option("--dt", dt, "Overrides the file's .tran step");
    simulate->add_option("--t-stop", t_stop, "Overrides the file's .tran stop time");
    simulate->add_option("--method", method_name, "trapezoidal or backward_euler");
    simulate->add_option("--stride", stride, "Record every n-th step")->capture_default_str();
    simulate->add_option("-o,--output", out_path, "Waveform CSV")->required();
    simulate->add_option("--out-dir", out_dir, "Output directory");

    // mine
    auto* mine_cmd = app.add_subcommand("mine", "Gate census over random terminal assignments");
    std::string config_path;
    std::optional<std::size_t> trials_flag, subset_flag;
    std::optional<std::uint64_t> seed_flag;
    std::string mine_model;
    unsigned threads = 0;
    bool dump_config = false;
    mine_cmd->add_option("config", config_path, "Run config (JSON); a run manifest also works");
    mine_cmd->add_option("--trials", trials_flag);
    mine_cmd->add_option("--seed", seed_flag, "Master seed");
    mine_cmd->add_option("--model", mine_model, "series or parallel");
    mine_cmd->add_option("--output-subset", subset_flag, "Outputs sampled per trial (0: all)");
    mine_cmd->add_option("--threads", threads, "Worker threads (0: all cores)")->capture_default_str();
    mine_cmd->add_flag("--dump-config", dump_config, "Print the effective config and exit");
    mine_cmd->add_option("--out-dir", out_dir, "Output directory");

    // fit
    auto* fit = app.add_subcommand("fit", "Fit count-versus-theta trends of a census CSV");
    std::string census_path;
    fit->add_option("census", census_path, "Census CSV")->required();
    fit->add_option("-o,--output", out_path, "Fits CSV")->required();
    fit->add_option("--out-dir", out_dir, "Output directory");

    // plot
    auto* plot = app.add_subcommand("plot", "Plot a census CSV as SVG");
    plot->add_option("census", census_path, "Census CSV")->required();
    plot->add_option("-o,--output", out_path, "SVG file")->required();
    plot->add_option("--out-dir", out_dir, "Output directory");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (ingest->parsed()) {
            if (!fs::exists(csv_path)) throw ConfigError("no such file: '" + csv_path + "'");
            colony::IngestResult res;
            if (fs::path(csv_path).extension() == ".json") {
                // coordinates are already in micrometres
                res = colony::read_graph_json(read_file(csv_path), merge_tol);
            } else {
                if (pitch.dx == 0.0 || pitch.dy == 0.0) throw ConfigError("ingest of a branch table needs --dx and --dy");
                pitch.validate();
                std::ifstream in(csv_path);
                if (!in) throw ConfigError("cannot open '" + csv_path + "'");
                res = colony::parse_branch_table(in, pitch, merge_tol);
            }
            pick_output_dir(out_dir).write(out_path, colony::to_json(res.graph));
            out << colony::format_stats(colony::graph_stats(res.graph));
            out << "rejected_records: " << res.rejected_records << "\n";
            out << "networks: " << res.network_count << "\n";
        } else if (synth->parsed()) {
            const auto g = colony::grow_synthetic_colony(sp);
            pick_output_dir(out_dir).write(out_path, colony::to_json(g));
            out << colony::format_stats(colony::graph_stats(g));
        } else if (netlist->parsed()) {
            RunConfig base = netlist_config.empty() ? RunConfig{} : load_config(netlist_config);
            if (rho) base.material.rho = *rho;
            if (cap) base.material.cap = *cap;
            if (gmin) base.material.gmin = *gmin;
            if (dt) base.solver.dt = *dt;
            if (t_stop) base.solver.t_stop = *t_stop;
            if (!method_name.empty()) base.solver.method = sim::integration_from_string(method_name);
            base.solver.validate();
            const auto g = detail::read_graph_file(graph_path);
            auto node = [&](long long id, const char* what) {
                if (id < 0 || !g.contains(static_cast<colony::NodeId>(id)))
                    throw DataError(std::string(what) + " node " + std::to_string(id) + " is not in the graph");
                return static_cast<colony::NodeId>(id);
            };
            std::vector<rc::SourceSpec> sources{{node(nv1, "v1"), base.v1}};
            if (nv2 >= 0) sources.push_back({node(nv2, "v2"), base.v2});
            const rc::Netlist net =
                rc::build_netlist(g, rc::edge_model_from_string(model_name), base.material, sources, node(ngnd, "gnd"));
            pick_output_dir(out_dir).write(out_path, rc::export_spice(net, base.solver));
            out << "nodes: " << net.node_count << "\nresistors: " << net.count<rc::Resistor>()
                << "\ncapacitors: " << net.count<rc::Capacitor>() << "\nsources: " << net.count<rc::VSource>()
                << "\n";
        } else if (simulate->parsed()) {
            if (!fs::exists(spice_path)) throw ConfigError("no such file: '" + spice_path + "'");
            std::ifstream in(spice_path);
            const auto parsed = rc::parse_spice(in);
            sim::SolverConfig scfg = parsed.tran.value_or(sim::SolverConfig{});
            if (dt) scfg.dt = *dt;
            if (t_stop) scfg.t_stop = *t_stop;
            if (!method_name.empty()) scfg.method = sim::integration_from_string(method_name);
            scfg.record_stride = stride;
            const auto result = sim::run_transient(parsed.netlist, scfg);
            std::ostringstream csv;
            sim::write_waveform_csv(result, csv);
            pick_output_dir(out_dir).write(out_path, csv.str());
            out << "steps: " << scfg.step_count() << "\nrows: " << result.samples() << "\n";
        } else if (mine_cmd->parsed()) {
            RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
            if (trials_flag) cfg.n_trials = *trials_flag;
            if (seed_flag) cfg.master_seed = *seed_flag;
            if (subset_flag) cfg.output_subset = *subset_flag;
            if (!mine_model.empty()) cfg.edge_model = rc::edge_model_from_string(mine_model);
            if (!out_dir.empty()) cfg.output_dir = fs::weakly_canonical(fs::absolute(out_dir));
            cfg.validate();
            if (dump_config) {
                out << to_json(cfg).dump(2) << "\n";
                return 0;
            }
            const OutputDir dir = pick_output_dir(out_dir, cfg.output_dir);
            const MineOutputs o = mine(cfg, threads);
            dir.write_all({{"census.csv", o.census_csv}, {"fits.csv", o.fits_csv}, {"manifest.json", o.manifest}});
            out << "wrote " << (dir.root() / "census.csv").string() << "\n";
            out << "census_sha256: " << sha256_hex(o.census_csv) << "\n";
        } else if (fit->parsed()) {
            const auto census = detail::read_census_file(census_path);
            const auto fits = census.output_site_count > 0 ? mining::fit_census(census)
                                                           : std::vector<mining::GroupFit>{};
            const std::string csv = mining::fits_to_csv(fits);
            pick_output_dir(out_dir).write(out_path, csv);
            out << csv;
        } else if (plot->parsed()) {
            const auto census = detail::read_census_file(census_path);
            pick_output_dir(out_dir).write(out_path, census_svg(census));
        }
    } catch (const Error& e) {
        err << "fungate: " << e.what() << "\n";
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        err << "fungate: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "fungate: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(std::move(args), out, err);
}

} // namespace fungate::cli
