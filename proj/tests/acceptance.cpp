// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Pass criterion numbers as arguments to run a subset.
//
// Reports for qualitative comparison (censuses, fits, SVG) are written to
// ./acceptance_reports.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fungate/cli/sha256.hpp"
#include "fungate/cli/svg_plot.hpp"
#include "fungate/colony/ingest.hpp"
#include "fungate/colony/synthetic.hpp"
#include "fungate/mining/fit.hpp"
#include "fungate/mining/miner.hpp"
#include "fungate/rc/netlist.hpp"
#include "fungate/rng.hpp"
#include "fungate/sim/transient.hpp"
#include "support/circuits.hpp"
#include "support/naive_census.hpp"
#include "support/oracles.hpp"

using namespace fungate;
namespace fs = std::filesystem;

namespace {

// tolerances and sizes
constexpr double kRcTolerance = 0.001 * 0.06;     // 0.1% of 60 mV
constexpr double kRcRuntime = 1.0;                // s
constexpr double kOrderRatio = 3.5;
constexpr double kKclRelative = 1e-9;
constexpr std::size_t kKclNetlists = 20;
constexpr std::size_t kKclSteps = 100;
constexpr std::size_t kKclMinNodes = 200;
constexpr std::size_t kPassiveColonies = 5;
constexpr std::size_t kPassiveTrials = 100;
constexpr double kBruteForceRuntime = 300.0;      // s
constexpr double kFitTolerance = 1e-3;
constexpr std::size_t kThroughputTrials = 1000;
constexpr double kThroughputRuntime = 1800.0;     // s
constexpr double kLengthTolerance = 1e-9;         // um

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const fs::path reports = "acceptance_reports";

void write_report(const std::string& name, const std::string& text) {
    fs::create_directories(reports);
    std::ofstream(reports / name, std::ios::binary) << text;
}

// ---------------------------------------------------------------------------

Verdict rc_oracle() {
    const auto t0 = Clock::now();
    const double err = circuits::rc_oracle_error(1e-3, sim::Integration::Trapezoidal);
    const double took = seconds_since(t0);
    return {err <= kRcTolerance && took < kRcRuntime,
            fmt("max error %.3e V (limit %.1e V), %.3f s (limit %.0f s)", err, kRcTolerance, took, kRcRuntime)};
}

Verdict convergence_order() {
    const double coarse = circuits::rc_oracle_error(1e-3, sim::Integration::Trapezoidal);
    const double fine = circuits::rc_oracle_error(0.5e-3, sim::Integration::Trapezoidal);
    const double ratio = coarse / fine;
    return {ratio >= kOrderRatio, fmt("error %.3e -> %.3e V, ratio %.3f (need >= %.1f)", coarse, fine, ratio, kOrderRatio)};
}

Verdict kcl() {
    double worst = 0.0;
    std::size_t checked = 0, smallest = SIZE_MAX;
    std::uint64_t seed = 100;
    SplitMix64 pick(2024);
    std::size_t made = 0;
    while (made < kKclNetlists) {
        colony::SyntheticColonyParams p;
        p.seed = ++seed;
        const auto g = colony::grow_synthetic_colony(p);
        const auto terms = colony::terminals(g);
        if (g.node_count() < kKclMinNodes || terms.size() < 4) continue;
        const auto model = made % 2 == 0 ? rc::EdgeModel::Series : rc::EdgeModel::Parallel;
        const auto trial = mining::draw_trials(terms, 1, seed);
        const auto net = rc::build_netlist(g, model, {}, trial[0].v1, trial[0].v2, trial[0].gnd, rc::default_v1(),
                                           rc::default_v2());
        ++made;
        smallest = std::min(smallest, net.node_count);

        sim::SolverConfig cfg;
        std::set<std::size_t> steps;
        while (steps.size() < kKclSteps) steps.insert(1 + pick.below(cfg.last_step()));
        sim::TransientSolver solver(net, cfg);
        sim::TransientResult row;
        row.dt = cfg.dt;
        row.t_stop = cfg.t_stop;
        row.ground = net.ground;
        row.node_count = net.node_count;
        row.component_count = net.components.size();
        row.edge_currents.resize(row.component_count);
        for (std::size_t k : steps) {
            while (solver.step_index() < k) solver.advance();
            row.times = {solver.time()};
            const auto v = solver.node_voltages();
            row.node_voltages.assign(v.begin(), v.end());
            solver.component_currents(row.edge_currents);
            double imax = 0.0;
            for (double i : row.edge_currents) imax = std::max(imax, std::abs(i));
            const double res = sim::kcl_residual(net, row, 0);
            const double rel = imax > 0.0 ? res / imax : (res == 0.0 ? 0.0 : INFINITY);
            worst = std::max(worst, rel);
            ++checked;
        }
    }
    return {worst <= kKclRelative && smallest >= kKclMinNodes,
            fmt("%zu netlists (smallest %zu nodes), %zu steps, worst residual / max|I| = %.3e (limit %.0e)", made,
                smallest, checked, worst, kKclRelative)};
}

// Criterion 4 runs are kept for 5 and 9.
struct PassiveRun {
    std::uint64_t colony_seed = 0;
    rc::EdgeModel model{};
    std::size_t nodes = 0;
    mining::MiningResult result;
    std::string csv;
};

std::vector<std::uint64_t> passive_colony_seeds() {
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; seeds.size() < kPassiveColonies; ++s) {
        colony::SyntheticColonyParams p;
        p.seed = s;
        if (colony::terminals(colony::grow_synthetic_colony(p)).size() >= 6) seeds.push_back(s);
    }
    return seeds;
}

std::vector<PassiveRun> passive_runs(unsigned threads) {
    std::vector<PassiveRun> runs;
    for (std::uint64_t s : passive_colony_seeds()) {
        colony::SyntheticColonyParams p;
        p.seed = s;
        const auto g = colony::grow_synthetic_colony(p);
        const auto trials = mining::draw_trials(colony::terminals(g), kPassiveTrials, 1000 + s);
        for (auto model : {rc::EdgeModel::Series, rc::EdgeModel::Parallel}) {
            mining::MiningSetup setup;
            setup.model = model;
            setup.threads = threads;
            setup.keep_samples = true;
            PassiveRun r{s, model, g.node_count(), mining::run_assignments(g, setup, trials), {}};
            r.csv = mining::census_to_csv(r.result.census);
            runs.push_back(std::move(r));
        }
    }
    return runs;
}

std::vector<PassiveRun> g_passive;

Verdict passivity() {
    const auto t0 = Clock::now();
    g_passive = passive_runs(1);
    std::uint64_t active = 0, xor_count = 0, pairs = 0;
    std::string per_run;
    for (const auto& r : g_passive) {
        const auto& c = r.result.census;
        if (c.theta_grid.size() != 500) return {false, "theta grid is not the 500-point default"};
        std::uint64_t run_xor = 0;
        for (const auto& row : c.counts) {
            active += row[static_cast<std::size_t>(mining::GateGroup::Active)];
            run_xor += row[static_cast<std::size_t>(mining::GateGroup::Xor)];
        }
        xor_count += run_xor;
        pairs += c.output_site_count;
        per_run += fmt(" [colony %llu, %zu nodes, %s: %llu trials, xor %llu]", static_cast<unsigned long long>(r.colony_seed),
                       r.nodes, rc::to_string(r.model).c_str(), static_cast<unsigned long long>(c.trial_count),
                       static_cast<unsigned long long>(run_xor));
        write_report(fmt("passive_colony%llu_%s.csv", static_cast<unsigned long long>(r.colony_seed),
                         rc::to_string(r.model).c_str()),
                     r.csv);
    }
    std::printf("  criterion 4 runs:%s\n", per_run.c_str());
    return {active == 0 && xor_count == 0 && g_passive.size() == 2 * kPassiveColonies,
            fmt("%zu colonies x 2 models x %zu trials, %llu (trial, output) pairs x 500 theta: ACTIVE = %llu, XOR = %llu "
                "(%.0f s)",
                kPassiveColonies, kPassiveTrials, static_cast<unsigned long long>(pairs),
                static_cast<unsigned long long>(active), static_cast<unsigned long long>(xor_count), seconds_since(t0))};
}

Verdict monotonicity() {
    if (g_passive.empty()) g_passive = passive_runs(1);
    std::size_t violations = 0, pairs = 0, const0_drops = 0;
    for (const auto& r : g_passive) {
        const auto& grid = r.result.census.theta_grid;
        for (const auto& t : r.result.trials) {
            for (const auto& v : t.samples) {
                ++pairs;
                auto prev = mining::binarize(v, grid.front());
                for (double th : grid) {
                    const auto cur = mining::binarize(v, th);
                    for (std::size_t b = 0; b < 4; ++b) violations += cur.bits[b] > prev.bits[b];
                    prev = cur;
                }
            }
        }
        const auto& counts = r.result.census.counts;
        constexpr auto c0 = static_cast<std::size_t>(mining::GateGroup::Const0);
        for (std::size_t i = 1; i < counts.size(); ++i) const0_drops += counts[i][c0] < counts[i - 1][c0];
    }
    return {violations == 0 && const0_drops == 0 && pairs > 0,
            fmt("%zu (trial, output) pairs: %zu bit increases, %zu CONST_0 decreases", pairs, violations, const0_drops)};
}

Verdict brute_force() {
    colony::SyntheticColonyParams p;
    p.seed = 33;
    p.max_steps = 4;
    p.n_tips_initial = 4;
    const auto g = colony::grow_synthetic_colony(p);
    const auto terms = colony::terminals(g);
    if (terms.size() != 6) return {false, fmt("colony has %zu terminals, expected 6", terms.size())};
    const auto t0 = Clock::now();
    bool same = true;
    std::string detail;
    for (auto model : {rc::EdgeModel::Series, rc::EdgeModel::Parallel}) {
        mining::MiningSetup setup;
        setup.model = model;
        setup.threads = 1;
        const auto trials = mining::enumerate_trials(terms, 6);
        const auto fast = mining::run_assignments(g, setup, trials).census;
        const auto naive = oracle::naive_census(g, setup);
        const bool eq = oracle::as_naive(fast) == naive;
        same = same && eq && trials.size() == 120;
        std::uint64_t non_const = 0;
        for (const auto& row : fast.counts)
            non_const += fast.output_site_count - row[static_cast<std::size_t>(mining::GateGroup::Const0)];
        detail += fmt("%s: %zu triples, %s, %llu non-CONST_0 classifications; ", rc::to_string(model).c_str(),
                      trials.size(), eq ? "identical" : "DIFFERENT", static_cast<unsigned long long>(non_const));
    }
    const double took = seconds_since(t0);
    return {same && took < kBruteForceRuntime,
            fmt("%zu nodes, 6 terminals; %s%.0f s (limit %.0f s)", g.node_count(), detail.c_str(), took,
                kBruteForceRuntime)};
}

Verdict fit_recovery() {
    std::vector<mining::Point2> pts;
    for (double x : mining::default_theta_grid()) pts.emplace_back(x, 72.0 * std::pow(x, -0.98));
    const auto f = mining::fit_power_law(pts);
    const double ea = std::abs(f.a() - 72.0) / 72.0, eb = std::abs(f.b() + 0.98) / 0.98;
    return {ea <= kFitTolerance && eb <= kFitTolerance,
            fmt("a = %.9g (rel err %.1e), b = %.9g (rel err %.1e), limit %.0e", f.a(), ea, f.b(), eb, kFitTolerance)};
}

std::string census_line(const mining::GateCensus& c, double theta) {
    std::string s = fmt("theta %.4g:", theta);
    for (auto grp : mining::all_gate_groups)
        s += fmt(" %s %llu", std::string(mining::group_name(grp)).c_str(),
                 static_cast<unsigned long long>(mining::census_counts(c, grp, theta)));
    return s;
}

/// Sign of the count change from the first to the last theta where the
/// group is present.
std::string trend(const mining::GateCensus& c, mining::GateGroup g) {
    const auto idx = static_cast<std::size_t>(g);
    const auto first = c.counts.front()[idx], last = c.counts.back()[idx];
    std::uint64_t peak = 0;
    for (const auto& row : c.counts) peak = std::max(peak, row[idx]);
    if (peak == 0) return "absent";
    return fmt("%llu -> %llu (peak %llu), %s", static_cast<unsigned long long>(first),
               static_cast<unsigned long long>(last), static_cast<unsigned long long>(peak),
               last < first ? "decreasing" : last > first ? "increasing" : "flat");
}

Verdict throughput() {
    colony::SyntheticColonyParams p;
    p.seed = 2;
    p.max_steps = 56;
    p.bounding_radius = 1500.0;
    const auto g = colony::grow_synthetic_colony(p);
    const auto terms = colony::terminals(g);
    mining::MiningSetup setup;
    setup.model = rc::EdgeModel::Parallel;
    setup.threads = 0;
    const auto t0 = Clock::now();
    const auto census = mining::run_trials(g, setup, kThroughputTrials, 1);
    const double took = seconds_since(t0);

    const auto fits = mining::fit_census(census);
    write_report("throughput_parallel_census.csv", mining::census_to_csv(census));
    write_report("throughput_parallel_fits.csv", mining::fits_to_csv(fits));
    write_report("throughput_parallel_census.svg", cli::census_svg(census));

    std::printf("  informative (non-gating) diagnostics:\n");
    std::printf("    parallel colony %zu nodes / %zu terminals, %llu classified pairs\n", g.node_count(), terms.size(),
                static_cast<unsigned long long>(census.output_site_count));
    for (double th : {1e-4, 0.01, 0.025, 0.05}) std::printf("    %s\n", census_line(census, th).c_str());
    for (auto grp : mining::fitted_groups)
        std::printf("    parallel %s trend: %s\n", std::string(mining::group_name(grp)).c_str(), trend(census, grp).c_str());
    for (const auto& f : fits) {
        if (f.fit.model == mining::FitModel::PowerLaw)
            std::printf("    parallel %s power law: %.4g * x^%.4g (r^2 %.3f)\n", std::string(mining::group_name(f.group)).c_str(),
                        f.fit.a(), f.fit.b(), f.fit.r_squared);
    }
    if (!g_passive.empty()) {
        mining::GateCensus series(mining::default_theta_grid());
        for (const auto& r : g_passive)
            if (r.model == rc::EdgeModel::Series) series.merge(r.result.census);
        std::printf("    series (criterion 4 colonies) and_not trend: %s\n",
                    trend(series, mining::GateGroup::AndNot).c_str());
        std::printf("    series %s\n", census_line(series, 1e-4).c_str());
        write_report("passive_series_combined.csv", mining::census_to_csv(series));
    }

    const bool sized = g.node_count() >= 900 && g.node_count() <= 1100;
    return {sized && took < kThroughputRuntime && census.trial_count == kThroughputTrials,
            fmt("%zu trials on %zu nodes, parallel model, %u hardware threads: %.0f s (limit %.0f s)",
                static_cast<std::size_t>(census.trial_count), g.node_count(), std::thread::hardware_concurrency(), took,
                kThroughputRuntime)};
}

Verdict determinism() {
    if (g_passive.empty()) g_passive = passive_runs(1);
    const auto again = passive_runs(4);
    std::size_t matched = 0;
    for (std::size_t i = 0; i < g_passive.size() && i < again.size(); ++i)
        matched += cli::sha256_hex(g_passive[i].csv) == cli::sha256_hex(again[i].csv);
    return {matched == g_passive.size() && again.size() == g_passive.size(),
            fmt("%zu of %zu census CSVs hash-identical between 1 and 4 worker threads", matched, g_passive.size())};
}

Verdict ingestion_round_trip() {
    std::ifstream in(std::string(FUNGATE_TEST_DATA) + "/branches_50.csv");
    if (!in) return {false, "fixture missing"};
    const colony::VoxelPitch pitch{0.65, 0.65, colony::default_slice_thickness_um};
    const auto first = colony::parse_branch_table(in, pitch, colony::default_merge_tolerance_um).graph;
    const auto second = colony::read_graph_json(colony::to_json(first), colony::default_merge_tolerance_um).graph;
    if (first.edge_count() != 50) return {false, fmt("fixture ingested to %zu edges", first.edge_count())};
    if (first.node_count() != second.node_count() || first.edge_count() != second.edge_count())
        return {false, "node or edge counts differ"};

    // match nodes by position, then edges by mapped endpoints
    std::vector<colony::NodeId> map(first.node_count());
    std::set<colony::NodeId> used;
    for (colony::NodeId i = 0; i < first.node_count(); ++i) {
        colony::NodeId best = 0;
        double best_d = INFINITY;
        for (colony::NodeId j = 0; j < second.node_count(); ++j) {
            const double d = colony::distance(first.point(i), second.point(j));
            if (d < best_d) best_d = d, best = j;
        }
        if (best_d > kLengthTolerance || !used.insert(best).second) return {false, fmt("node %zu has no partner", i)};
        map[i] = best;
    }
    std::multimap<std::pair<colony::NodeId, colony::NodeId>, double> edges;
    for (const auto& e : second.edges()) edges.insert({{std::min(e.u, e.v), std::max(e.u, e.v)}, e.length});
    double worst = 0.0;
    for (const auto& e : first.edges()) {
        const auto key = std::make_pair(std::min(map[e.u], map[e.v]), std::max(map[e.u], map[e.v]));
        auto [lo, hi] = edges.equal_range(key);
        auto hit = hi;
        for (auto it = lo; it != hi; ++it)
            if (hit == hi || std::abs(it->second - e.length) < std::abs(hit->second - e.length)) hit = it;
        if (hit == hi) return {false, "edge without partner"};
        worst = std::max(worst, std::abs(hit->second - e.length));
        edges.erase(hit);
    }
    return {worst <= kLengthTolerance,
            fmt("%zu nodes, %zu edges matched; max length difference %.1e um (limit %.0e)", first.node_count(),
                first.edge_count(), worst, kLengthTolerance)};
}

struct Criterion {
    int id;
    const char* name;
    Verdict (*run)();
};

const Criterion criteria[] = {
    {1, "analytic RC oracle", rc_oracle},
    {2, "trapezoidal convergence order", convergence_order},
    {3, "KCL on synthetic colonies", kcl},
    {4, "passivity exclusion (ACTIVE = 0, XOR = 0)", passivity},
    {5, "theta monotonicity", monotonicity},
    {6, "brute-force census equivalence", brute_force},
    {7, "power-law fit recovery", fit_recovery},
    {8, "desk-scale throughput", throughput},
    {9, "thread-count determinism", determinism},
    {10, "ingestion round trip", ingestion_round_trip},
};

} // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failed += !v.pass;
        std::printf("%s criterion %d: %s: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name, v.detail.c_str());
        std::fflush(stdout);
    }
    return failed ? 1 : 0;
}
