#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fungate/cli/commands.hpp"
#include "fungate/colony/ingest.hpp"
#include "fungate/rc/spice.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
    int code = 0;
    std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    Outcome o;
    o.code = fungate::cli::run(std::move(args), out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void put(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

/// Fresh scratch directory per test.
class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / ("fungate_cli_" + std::string(info->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string at(const std::string& name) const { return (dir / name).string(); }

    /// Small synthetic colony, parallel model, a handful of trials.
    std::string small_config(std::size_t trials, const std::string& name = "run.json") const {
        const json cfg = {{"graph", {{"synthetic", {{"seed", 2}, {"max_steps", 10}}}}},
                          {"edge_model", "parallel"},
                          {"n_trials", trials},
                          {"master_seed", 11}};
        put(dir / name, cfg.dump(2));
        return at(name);
    }

    fs::path dir;
};

} // namespace

TEST_F(Cli, IngestTwoBranchesMergesSharedEndpoint) {
    put(dir / "two.csv", "network_id,branch_id,x1,y1,z1,x2,y2,z2\n1,1,0,0,0,10,0,0\n1,2,10,0,0,10,10,0\n");
    const auto r = cli({"ingest", at("two.csv"), "--dx", "1", "--dy", "1", "-o", "g.json", "--out-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto g = fungate::colony::read_graph_json(slurp(dir / "g.json")).graph;
    EXPECT_EQ(g.node_count(), 3u);
    EXPECT_EQ(g.edge_count(), 2u);
    EXPECT_NE(r.out.find("nodes"), std::string::npos);
}

TEST_F(Cli, IngestMissingFileNamesThePath) {
    const auto r = cli({"ingest", at("nope.csv"), "--dx", "1", "--dy", "1", "-o", "g.json", "--out-dir", dir.string()});
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.err.find("nope.csv"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "g.json"));
}

TEST_F(Cli, IngestRowErrorsAndMissingPitch) {
    put(dir / "bad.csv", "network_id,branch_id,x1,y1,z1,x2,y2,z2\n1,1,0,0,0,10,0,0\n1,2,a,0,0,1,1,1\n");
    auto r = cli({"ingest", at("bad.csv"), "--dx", "1", "--dy", "1", "-o", "g.json", "--out-dir", dir.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("3"), std::string::npos) << r.err;
    r = cli({"ingest", at("bad.csv"), "-o", "g.json", "--out-dir", dir.string()});
    EXPECT_EQ(r.code, 1);
}

TEST_F(Cli, ReingestingOwnOutputKeepsStats) {
    const std::string fixture = std::string(FUNGATE_TEST_DATA) + "/branches_50.csv";
    const auto first = cli({"ingest", fixture, "--dx", "0.65", "--dy", "0.65", "-o", "a.json", "--out-dir", dir.string()});
    ASSERT_EQ(first.code, 0) << first.err;
    const auto second = cli({"ingest", at("a.json"), "-o", "b.json", "--out-dir", dir.string()});
    ASSERT_EQ(second.code, 0) << second.err;
    // the stats block is everything before the ingest-specific trailer lines
    auto stats = [](const std::string& s) { return s.substr(0, s.find("rejected_records")); };
    EXPECT_EQ(stats(first.out), stats(second.out));
    EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
}

TEST_F(Cli, SynthIsDeterministic) {
    ASSERT_EQ(cli({"synth", "--seed", "1", "-o", "a.json", "--out-dir", dir.string()}).code, 0);
    ASSERT_EQ(cli({"synth", "--seed", "1", "-o", "b.json", "--out-dir", dir.string()}).code, 0);
    EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
    const auto g = fungate::colony::read_graph_json(slurp(dir / "a.json")).graph;
    EXPECT_GE(fungate::colony::terminals(g).size(), 4u);
}

TEST_F(Cli, SynthSingleTipWithoutBranchingIsAPath) {
    const auto r = cli({"synth", "--branch-probability", "0", "--tips", "1", "-o", "p.json", "--out-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto g = fungate::colony::read_graph_json(slurp(dir / "p.json")).graph;
    EXPECT_EQ(g.edge_count() + 1, g.node_count());
    EXPECT_EQ(fungate::colony::terminals(g).size(), 2u);
    for (fungate::colony::NodeId i = 0; i < g.node_count(); ++i) EXPECT_LE(g.degree(i), 2u);
}

TEST_F(Cli, SynthInfeasibleParamsFail) {
    EXPECT_EQ(cli({"synth", "--tips", "0", "-o", "x.json", "--out-dir", dir.string()}).code, 1);
    EXPECT_FALSE(fs::exists(dir / "x.json"));
}

TEST_F(Cli, NetlistSingleEdge) {
    put(dir / "edge.json", R"({"nodes":[{"id":0,"x":0,"y":0,"z":0},{"id":1,"x":40,"y":0,"z":0}],
                               "edges":[{"u":0,"v":1,"len":40}]})");
    const auto r = cli({"netlist", at("edge.json"), "--v1", "1", "--gnd", "0", "--model", "parallel", "-o", "e.cir",
                        "--out-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string text = slurp(dir / "e.cir");
    const std::regex r_line("(^|\n)R\\S* "), c_line("(^|\n)C\\S* "), v_line("(^|\n)V\\S* ");
    auto lines = [&](const std::regex& re) {
        return std::distance(std::sregex_iterator(text.begin(), text.end(), re), std::sregex_iterator());
    };
    EXPECT_EQ(lines(r_line), 1);
    EXPECT_EQ(lines(c_line), 1);
    EXPECT_EQ(lines(v_line), 1);
    EXPECT_NE(text.find(".tran 0.001 40\n"), std::string::npos) << text;
    EXPECT_NE(text.find("\n.end"), std::string::npos);
}

TEST_F(Cli, NetlistSeriesHasInternalNodesAndReparses) {
    ASSERT_EQ(cli({"synth", "--seed", "3", "--steps", "8", "-o", "g.json", "--out-dir", dir.string()}).code, 0);
    const auto g = fungate::colony::read_graph_json(slurp(dir / "g.json")).graph;
    const auto t = fungate::colony::terminals(g);
    ASSERT_GE(t.size(), 3u);
    const auto r = cli({"netlist", at("g.json"), "--v1", std::to_string(t[0]), "--v2", std::to_string(t[1]), "--gnd",
                        std::to_string(t[2]), "--model", "series", "-o", "s.cir", "--out-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto parsed = fungate::rc::parse_spice(slurp(dir / "s.cir"));
    const auto expect = fungate::rc::build_netlist(g, fungate::rc::EdgeModel::Series, {}, t[0], t[1], t[2],
                                                   fungate::rc::default_v1(), fungate::rc::default_v2());
    EXPECT_EQ(parsed.netlist.node_count, g.node_count() + g.edge_count());
    EXPECT_EQ(parsed.netlist.node_count, expect.node_count);
    EXPECT_EQ(parsed.netlist.labels, expect.labels);
    EXPECT_EQ(parsed.netlist.components.size(), expect.components.size());
    // the highest internal node of the series model appears in the file
    EXPECT_NE(slurp(dir / "s.cir").find(" " + std::to_string(expect.node_count - 1) + " "), std::string::npos);
}

TEST_F(Cli, NetlistInvalidTerminalsFail) {
    ASSERT_EQ(cli({"synth", "--seed", "3", "--steps", "8", "-o", "g.json", "--out-dir", dir.string()}).code, 0);
    EXPECT_NE(cli({"netlist", at("g.json"), "--v1", "0", "--gnd", "0", "-o", "x.cir", "--out-dir", dir.string()}).code, 0);
    EXPECT_NE(cli({"netlist", at("g.json"), "--v1", "100000", "--gnd", "0", "-o", "x.cir", "--out-dir", dir.string()}).code,
              0);
    EXPECT_FALSE(fs::exists(dir / "x.cir"));
}

TEST_F(Cli, SimulateWritesWaveformCsv) {
    put(dir / "rc.cir", "* rc\nV1 1 0 PULSE(0 60m 0 1m 1m 10 20)\nR1 1 2 1k\nC1 2 0 1m\n.tran 1m 2\n.end\n");
    const auto r = cli({"simulate", at("rc.cir"), "--stride", "10", "-o", "w.csv", "--out-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = slurp(dir / "w.csv");
    EXPECT_EQ(count(csv, "\n"), 1u + 201u); // header + rows 0, 10, ..., 2000
    EXPECT_EQ(cli({"simulate", at("none.cir"), "-o", "w2.csv", "--out-dir", dir.string()}).code, 1);
}

TEST_F(Cli, MineZeroTrialsGivesZeroCensusAndNoFits) {
    const auto r = cli({"mine", small_config(0), "--out-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto census = fungate::mining::census_from_csv(slurp(dir / "census.csv"));
    EXPECT_EQ(census.theta_grid.size(), 500u);
    for (std::size_t i = 0; i < census.counts.size(); ++i) EXPECT_EQ(census.row_total(i), 0u);
    EXPECT_EQ(slurp(dir / "fits.csv"), "group,model,a,b,c,r_squared\n");
    EXPECT_TRUE(fs::exists(dir / "manifest.json"));
}

TEST_F(Cli, MineDefaultSeriesCensusHas500Rows) {
    const auto r = cli({"mine", "--trials", "2", "--model", "series", "--out-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string csv = slurp(dir / "census.csv");
    EXPECT_EQ(count(csv, "\n"), 501u);
    const auto census = fungate::mining::census_from_csv(csv);
    EXPECT_GT(census.output_site_count, 0u);
    EXPECT_EQ(census.row_total(499), census.output_site_count);
}

TEST_F(Cli, MineIsReproducibleFromConfigAndManifest) {
    const auto cfg = small_config(4);
    const auto a = cli({"mine", cfg, "--out-dir", (dir / "a").string()});
    ASSERT_EQ(a.code, 0) << a.err;
    const auto b = cli({"mine", cfg, "--out-dir", (dir / "b").string(), "--threads", "3"});
    ASSERT_EQ(b.code, 0) << b.err;
    const std::string census = slurp(dir / "a" / "census.csv");
    EXPECT_EQ(census, slurp(dir / "b" / "census.csv"));
    EXPECT_EQ(slurp(dir / "a" / "fits.csv"), slurp(dir / "b" / "fits.csv"));
    EXPECT_NE(a.out.find(fungate::cli::sha256_hex(census)), std::string::npos);

    const auto manifest = nlohmann::ordered_json::parse(slurp(dir / "a" / "manifest.json"));
    EXPECT_EQ(manifest.at("master_seed"), 11);
    EXPECT_EQ(manifest.at("version"), fungate::version);
    EXPECT_EQ(manifest.at("outputs").at("census.csv"), fungate::cli::sha256_hex(census));
    EXPECT_EQ(manifest.at("config_sha256").get<std::string>().size(), 64u);

    // the manifest alone reruns the job; its output_dir points back at a/
    fs::copy_file(dir / "a" / "manifest.json", dir / "manifest_copy.json");
    fs::remove(dir / "a" / "census.csv");
    const auto again = cli({"mine", at("manifest_copy.json")});
    ASSERT_EQ(again.code, 0) << again.err;
    EXPECT_EQ(slurp(dir / "a" / "census.csv"), census);
    EXPECT_EQ(slurp(dir / "a" / "manifest.json"), manifest.dump(2) + "\n");
}

TEST_F(Cli, DumpedConfigRoundTrips) {
    const auto dump = cli({"mine", small_config(3), "--seed", "5", "--dump-config", "--out-dir", (dir / "x").string()});
    ASSERT_EQ(dump.code, 0) << dump.err;
    const json eff = json::parse(dump.out);
    EXPECT_EQ(eff.at("master_seed"), 5);
    EXPECT_EQ(eff.at("theta").at("step"), 1e-4);
    EXPECT_FALSE(fs::exists(dir / "x" / "census.csv"));
    put(dir / "dumped.json", dump.out);
    const auto redump = cli({"mine", at("dumped.json"), "--dump-config"});
    EXPECT_EQ(redump.out, dump.out);

    ASSERT_EQ(cli({"mine", small_config(3), "--seed", "5", "--out-dir", (dir / "x").string()}).code, 0);
    const std::string first = slurp(dir / "x" / "census.csv");
    ASSERT_EQ(cli({"mine", at("dumped.json"), "--out-dir", (dir / "y").string()}).code, 0);
    EXPECT_EQ(slurp(dir / "y" / "census.csv"), first);
}

TEST_F(Cli, ConfigErrorsExitWithOne) {
    put(dir / "typo.json", R"({"n_trails": 3})");
    auto r = cli({"mine", at("typo.json"), "--out-dir", dir.string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("n_trails"), std::string::npos);
    put(dir / "two.json", R"({"graph": {"synthetic": {}, "json": {"path": "g.json"}}})");
    EXPECT_EQ(cli({"mine", at("two.json"), "--out-dir", dir.string()}).code, 1);
    put(dir / "theta.json", R"({"theta": {"min": 0}})");
    EXPECT_EQ(cli({"mine", at("theta.json"), "--out-dir", dir.string()}).code, 1);
    EXPECT_EQ(cli({"frobnicate"}).code, 1);
    EXPECT_EQ(cli({"mine", "--trials", "many"}).code, 1);
    EXPECT_FALSE(fs::exists(dir / "census.csv"));
}

TEST_F(Cli, MineWithTooFewTerminalsIsADataError) {
    put(dir / "path.json", R"({"nodes":[{"id":0,"x":0,"y":0,"z":0},{"id":1,"x":40,"y":0,"z":0},
                               {"id":2,"x":80,"y":0,"z":0}],
                               "edges":[{"u":0,"v":1,"len":40},{"u":1,"v":2,"len":40}]})");
    put(dir / "cfg.json", R"({"graph": {"json": {"path": "path.json"}}, "n_trials": 2})");
    const auto r = cli({"mine", at("cfg.json"), "--out-dir", (dir / "out").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(fs::exists(dir / "out" / "census.csv"));
    EXPECT_FALSE(fs::exists(dir / "out" / "manifest.json"));
}

TEST_F(Cli, FailedWriteLeavesNoPartialOutputs) {
    // a non-empty directory named manifest.json makes the last rename fail
    put(dir / "out" / "manifest.json" / "keep", "x");
    const auto r = cli({"mine", small_config(2), "--out-dir", (dir / "out").string()});
    EXPECT_NE(r.code, 0);
    EXPECT_FALSE(fs::exists(dir / "out" / "census.csv"));
    EXPECT_FALSE(fs::exists(dir / "out" / "fits.csv"));
    EXPECT_FALSE(fs::exists(dir / "out" / "census.csv.partial"));
    EXPECT_FALSE(fs::exists(dir / "out" / "fits.csv.partial"));
}

TEST_F(Cli, RefusesToWriteOutsideOutputDirectory) {
    fs::create_directories(dir / "out");
    auto r = cli({"synth", "-o", "../escape.json", "--out-dir", (dir / "out").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("outside the output directory"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "escape.json"));
    r = cli({"synth", "-o", at("abs.json"), "--out-dir", (dir / "out").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(fs::exists(dir / "abs.json"));
    EXPECT_EQ(cli({"synth", "-o", (dir / "out" / "in.json").string(), "--out-dir", (dir / "out").string()}).code, 0);
}

TEST_F(Cli, EnvironmentSuppliesDefaultOutputDirectory) {
    fs::create_directories(dir / "env");
    ::setenv(fungate::cli::output_dir_env, (dir / "env").c_str(), 1);
    const auto r = cli({"synth", "-o", "g.json"});
    ::unsetenv(fungate::cli::output_dir_env);
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir / "env" / "g.json"));
}

TEST_F(Cli, PlotCensus) {
    ASSERT_EQ(cli({"mine", small_config(2), "--out-dir", dir.string()}).code, 0);
    ASSERT_EQ(cli({"plot", at("census.csv"), "-o", "c.svg", "--out-dir", dir.string()}).code, 0);
    const std::string svg = slurp(dir / "c.svg");
    EXPECT_EQ(count(svg, "<polyline"), 4u);
    for (const char* colour : {"black", "green", "red", "blue"}) EXPECT_NE(svg.find(colour), std::string::npos);

    put(dir / "empty.csv", std::string(fungate::mining::census_header) + "\n");
    ASSERT_EQ(cli({"plot", at("empty.csv"), "-o", "e.svg", "--out-dir", dir.string()}).code, 0);
    const std::string empty = slurp(dir / "e.svg");
    EXPECT_EQ(count(empty, "<polyline"), 0u);
    EXPECT_NE(empty.find("<line"), std::string::npos);

    put(dir / "bad.csv", "theta,and\n0.1,2\n");
    EXPECT_EQ(cli({"plot", at("bad.csv"), "-o", "b.svg", "--out-dir", dir.string()}).code, 2);
    EXPECT_FALSE(fs::exists(dir / "b.svg"));
}

TEST_F(Cli, ZeroCountGroupIsFlatAtBaseline) {
    put(dir / "c.csv", std::string(fungate::mining::census_header) + "\n0.001,0,3,0,0,0,1,0,4\n0.002,0,1,0,0,0,3,0,4\n");
    ASSERT_EQ(cli({"plot", at("c.csv"), "-o", "c.svg", "--out-dir", dir.string()}).code, 0);
    const std::string svg = slurp(dir / "c.svg");
    std::smatch m;
    ASSERT_TRUE(std::regex_search(svg, m, std::regex(R"(data-group="and"[^>]*points="([^"]*)\")")));
    // both points share the same y coordinate
    const std::string pts = m[1];
    std::regex pt(R"([-0-9.]+,([-0-9.]+))");
    std::vector<std::string> ys;
    for (auto it = std::sregex_iterator(pts.begin(), pts.end(), pt); it != std::sregex_iterator(); ++it)
        ys.push_back((*it)[1]);
    ASSERT_EQ(ys.size(), 2u);
    EXPECT_EQ(ys[0], ys[1]);
}

TEST_F(Cli, FitCommand) {
    std::string csv = std::string(fungate::mining::census_header) + "\n";
    for (int i = 1; i <= 10; ++i) {
        const int n = 1000 / i;
        csv += std::to_string(i * 0.001) + ",0,0," + std::to_string(n) + ",0,0," + std::to_string(1000 - n) + ",0,1000\n";
    }
    put(dir / "c.csv", csv);
    const auto r = cli({"fit", at("c.csv"), "-o", "f.csv", "--out-dir", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string fits = slurp(dir / "f.csv");
    EXPECT_NE(fits.find("and_not,power_law,"), std::string::npos);
    EXPECT_NE(fits.find("and_not,linear,"), std::string::npos);
    EXPECT_NE(fits.find("and_not,quadratic,"), std::string::npos);
    EXPECT_EQ(fits.find("\nor,"), std::string::npos);
}

TEST_F(Cli, HelpAndVersionExitZero) {
    EXPECT_EQ(cli({"--help"}).code, 0);
    const auto v = cli({"--version"});
    EXPECT_EQ(v.code, 0);
    EXPECT_NE(v.out.find(fungate::version), std::string::npos);
}
