#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "fungate/colony/graph.hpp"
#include "fungate/error.hpp"
#include "fungate/mining/census.hpp"
#include "fungate/mining/gates.hpp"
#include "fungate/rc/netlist.hpp"
#include "fungate/rng.hpp"
#include "fungate/sim/transient.hpp"

namespace fungate::mining {

using NodeId = colony::NodeId;

struct Epoch {
    double t_start = 0.0;
    double t_end = 0.0;
    int x = 0;
    int y = 0;
};

/// Four input epochs; outputs are read `sample_offset` seconds before each
/// epoch ends.
struct InputSchedule {
    std::array<Epoch, 4> epochs{};
    double sample_offset = 1e-3;

    double sample_time(std::size_t i) const { return epochs[i].t_end - sample_offset; }

    void validate() const {
        std::array<bool, 4> seen{};
        for (std::size_t i = 0; i < 4; ++i) {
            const Epoch& e = epochs[i];
            if ((e.x != 0 && e.x != 1) || (e.y != 0 && e.y != 1))
                throw ConfigError("epoch input bits must be 0 or 1");
            if (!(e.t_end > e.t_start) || e.t_start < 0.0) throw ConfigError("epoch bounds must be increasing");
            if (i > 0 && e.t_start < epochs[i - 1].t_end) throw ConfigError("epochs must be ordered and disjoint");
            if (seen[pair_slot(e.x, e.y)]) throw ConfigError("epochs must cover four distinct input pairs");
            seen[pair_slot(e.x, e.y)] = true;
            const double ts = sample_time(i);
            if (!(ts >= e.t_start && ts < e.t_end)) throw ConfigError("sample time falls outside its epoch");
        }
    }
};

/// [0,10) -> (0,0), [10,20) -> (1,0), [20,30) -> (0,1), [30,40) -> (1,1),
/// sampled one 1 ms step before each boundary.
inline InputSchedule default_schedule() {
    InputSchedule s;
    s.epochs = {Epoch{0.0, 10.0, 0, 0}, Epoch{10.0, 20.0, 1, 0}, Epoch{20.0, 30.0, 0, 1}, Epoch{30.0, 40.0, 1, 1}};
    s.sample_offset = 1e-3;
    return s;
}

/// Input pair of the epoch containing t, if any.
inline std::optional<std::pair<int, int>> input_pair_at(const InputSchedule& s, double t) {
    for (const Epoch& e : s.epochs) {
        if (t >= e.t_start && t < e.t_end) return std::pair{e.x, e.y};
    }
    return std::nullopt;
}

inline std::map<NodeId, Samples4> sample_outputs(const sim::TransientResult& r, const InputSchedule& s,
                                                 std::span<const NodeId> outputs) {
    std::map<NodeId, Samples4> out;
    for (NodeId node : outputs) {
        if (node >= r.node_count) throw DataError("sample_outputs: unknown node " + std::to_string(node));
        Samples4 v{};
        for (std::size_t i = 0; i < 4; ++i)
            v[pair_slot(s.epochs[i].x, s.epochs[i].y)] = sim::probe(r, node, s.sample_time(i));
        out[node] = v;
    }
    return out;
}

struct TrialSpec {
    std::size_t trial_index = 0;
    NodeId v1 = 0;
    NodeId v2 = 0;
    NodeId gnd = 0;
    std::uint64_t rng_seed = 0;

    friend bool operator==(const TrialSpec&, const TrialSpec&) = default;
};

/// Draws (v1, v2, gnd) without replacement from the terminals using a seed
/// that depends only on (master_seed, trial index).
inline std::vector<TrialSpec> draw_trials(std::span<const NodeId> terminals, std::size_t n_trials,
                                          std::uint64_t master_seed) {
    if (terminals.size() < 4 && n_trials > 0)
        throw DataError("gate mining needs at least 4 terminals, graph has " + std::to_string(terminals.size()));
    std::vector<TrialSpec> out;
    out.reserve(n_trials);
    for (std::size_t i = 0; i < n_trials; ++i) {
        TrialSpec t;
        t.trial_index = i;
        t.rng_seed = derive_seed(master_seed, i);
        SplitMix64 rng(t.rng_seed);
        std::vector<NodeId> pool(terminals.begin(), terminals.end());
        auto take = [&] {
            const auto k = static_cast<std::size_t>(rng.below(pool.size()));
            const NodeId n = pool[k];
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(k));
            return n;
        };
        t.v1 = take();
        t.v2 = take();
        t.gnd = take();
        out.push_back(t);
    }
    return out;
}

/// Every ordered (v1, v2, gnd) triple of distinct terminals.
inline std::vector<TrialSpec> enumerate_trials(std::span<const NodeId> terminals, std::uint64_t master_seed = 0) {
    if (terminals.size() < 4) throw DataError("gate mining needs at least 4 terminals");
    std::vector<TrialSpec> out;
    for (NodeId a : terminals) {
        for (NodeId b : terminals) {
            for (NodeId c : terminals) {
                if (a == b || a == c || b == c) continue;
                const std::size_t i = out.size();
                out.push_back({i, a, b, c, derive_seed(master_seed, i)});
            }
        }
    }
    return out;
}

/// Everything about a mining run except the graph and the trial list.
struct MiningSetup {
    rc::EdgeModel model = rc::EdgeModel::Series;
    rc::MaterialConstants material;
    rc::PulseWaveform w1 = rc::default_v1();
    rc::PulseWaveform w2 = rc::default_v2();
    sim::SolverConfig solver;
    InputSchedule schedule = default_schedule();
    std::vector<double> theta_grid = default_theta_grid();
    std::size_t output_subset = 0; // 0: every remaining terminal is an output
    unsigned threads = 0;          // 0: hardware concurrency
    bool keep_samples = false;
};

struct TrialOutcome {
    TrialSpec spec;
    std::vector<NodeId> outputs;
    std::vector<Samples4> samples; // aligned with outputs
};

struct MiningResult {
    GateCensus census;
    std::vector<TrialOutcome> trials; // filled when keep_samples is set
};

/// Output sites of a trial: the terminals other than v1, v2, gnd, or a
/// seeded random subset of them.
inline std::vector<NodeId> output_sites(std::span<const NodeId> terminals, const TrialSpec& t,
                                        std::size_t subset) {
    std::vector<NodeId> out;
    for (NodeId n : terminals) {
        if (n != t.v1 && n != t.v2 && n != t.gnd) out.push_back(n);
    }
    if (subset > 0 && subset < out.size()) {
        SplitMix64 rng(t.rng_seed ^ 0x5851F42D4C957F2DULL);
        for (std::size_t i = 0; i < subset; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(out.size() - i));
            std::swap(out[i], out[j]);
        }
        out.resize(subset);
        std::sort(out.begin(), out.end());
    }
    return out;
}

/// Simulates one terminal assignment and reads every output at the four
/// sample times. The run stops at the last sample step.
inline TrialOutcome simulate_trial(const colony::EuclideanGraph& g, std::span<const NodeId> terminals,
                                   const MiningSetup& setup, const TrialSpec& spec) {
    TrialOutcome outcome;
    outcome.spec = spec;
    outcome.outputs = output_sites(terminals, spec, setup.output_subset);

    const rc::Netlist net =
        rc::build_netlist(g, setup.model, setup.material, spec.v1, spec.v2, spec.gnd, setup.w1, setup.w2);
    sim::TransientSolver solver(net, setup.solver);

    std::array<std::size_t, 4> sample_step{};
    for (std::size_t i = 0; i < 4; ++i) {
        const double pos = setup.schedule.sample_time(i) / setup.solver.dt;
        auto k = static_cast<std::size_t>(std::floor(pos));
        if (pos - static_cast<double>(k) > 0.5 + 1e-9) ++k;
        if (k > setup.solver.last_step()) throw ConfigError("sample time beyond t_stop");
        sample_step[i] = k;
    }
    const std::size_t last = *std::max_element(sample_step.begin(), sample_step.end());

    outcome.samples.assign(outcome.outputs.size(), Samples4{});
    auto capture = [&] {
        for (std::size_t i = 0; i < 4; ++i) {
            if (sample_step[i] != solver.step_index()) continue;
            const auto v = solver.node_voltages();
            const std::size_t slot = pair_slot(setup.schedule.epochs[i].x, setup.schedule.epochs[i].y);
            for (std::size_t o = 0; o < outcome.outputs.size(); ++o) outcome.samples[o][slot] = v[outcome.outputs[o]];
        }
    };
    capture();
    while (solver.step_index() < last) {
        solver.advance();
        capture();
    }
    return outcome;
}

/**
 * Runs the given trials, in parallel when threads allow. Each trial owns its
 * solver; per-trial censuses are merged in trial order, so the result does
 * not depend on scheduling or thread count.
 */
inline MiningResult run_assignments(const colony::EuclideanGraph& g, const MiningSetup& setup,
                                    std::span<const TrialSpec> trials) {
    setup.material.validate();
    setup.w1.validate();
    setup.w2.validate();
    setup.solver.validate();
    setup.schedule.validate();
    const auto terms = colony::terminals(g);

    std::vector<GateCensus> partial(trials.size());
    std::vector<TrialOutcome> outcomes(setup.keep_samples ? trials.size() : 0);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= trials.size()) return;
            try {
                TrialOutcome o = simulate_trial(g, terms, setup, trials[i]);
                GateCensus c(setup.theta_grid);
                c.trial_count = 1;
                for (const Samples4& s : o.samples) c.add(s);
                partial[i] = std::move(c);
                if (setup.keep_samples) outcomes[i] = std::move(o);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(trials.size());
                return;
            }
        }
    };

    unsigned threads = setup.threads ? setup.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, trials.size())));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    MiningResult result{GateCensus(setup.theta_grid), std::move(outcomes)};
    for (const GateCensus& c : partial) result.census.merge(c);
    return result;
}

inline GateCensus run_trials(const colony::EuclideanGraph& g, const MiningSetup& setup, std::size_t n_trials,
                             std::uint64_t master_seed) {
    const auto terms = colony::terminals(g);
    if (terms.size() < 4)
        throw DataError("gate mining needs at least 4 terminals, graph has " + std::to_string(terms.size()));
    const auto trials = draw_trials(terms, n_trials, master_seed);
    return run_assignments(g, setup, trials).census;
}

} // namespace fungate::mining
