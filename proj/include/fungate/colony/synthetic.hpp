#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "fungate/colony/graph.hpp"
#include "fungate/error.hpp"
#include "fungate/rng.hpp"

namespace fungate::colony {

/// Growth parameters for a synthetic colony; lengths in micrometres.
struct SyntheticColonyParams {
    std::uint64_t seed = 1;
    int n_tips_initial = 4;
    double step_length_mean = 40.0;
    double step_length_sd = 12.0;
    double branch_probability = 0.06;
    int max_steps = 40;
    double bounding_radius = 800.0;
    double anastomosis_radius = 20.0;

    void validate() const {
        if (n_tips_initial < 1) throw ConfigError("n_tips_initial must be >= 1");
        if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
        if (!(step_length_mean > 0.0)) throw ConfigError("step_length_mean must be positive");
        if (!(step_length_sd >= 0.0)) throw ConfigError("step_length_sd must be non-negative");
        if (!(branch_probability >= 0.0 && branch_probability <= 1.0))
            throw ConfigError("branch_probability must lie in [0, 1]");
        if (!(bounding_radius > 0.0)) throw ConfigError("bounding_radius must be positive");
        if (!(anastomosis_radius >= 0.0)) throw ConfigError("anastomosis_radius must be non-negative");
    }
};

namespace detail {

struct Vec3 {
    double x, y, z;
};

inline Vec3 normalized(Vec3 v) {
    const double n = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    if (n == 0.0) return {1.0, 0.0, 0.0};
    return {v.x / n, v.y / n, v.z / n};
}

inline Vec3 random_direction(SplitMix64& rng) {
    return normalized({rng.normal(0.0, 1.0), rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)});
}

inline Vec3 perturb(const Vec3& d, double sigma, SplitMix64& rng) {
    return normalized({d.x + rng.normal(0.0, sigma), d.y + rng.normal(0.0, sigma),
                       d.z + rng.normal(0.0, sigma)});
}

} // namespace detail

/**
 * Grows a colony as a set of persistent random walks from the origin.
 *
 * Every active tip takes one step per round. A tip stops when its next step
 * would leave the bounding sphere, and fuses (anastomosis) with the nearest
 * node of a different hypha within `anastomosis_radius`. After each step a
 * tip spawns a lateral branch with `branch_probability`. Edges are straight,
 * so every length equals its chord exactly. The result is connected and a
 * pure function of the parameters.
 */
inline EuclideanGraph grow_synthetic_colony(const SyntheticColonyParams& p) {
    p.validate();

    constexpr double heading_noise = 0.25;
    constexpr double branch_turn = 0.9;
    constexpr std::uint32_t root_lineage = std::numeric_limits<std::uint32_t>::max();

    struct Tip {
        NodeId node;
        detail::Vec3 dir;
        std::uint32_t lineage;
    };
    using Cell = std::tuple<long long, long long, long long>;

    SplitMix64 rng(p.seed);
    std::vector<Point3> points{{0.0, 0.0, 0.0}};
    std::vector<std::uint32_t> lineage{root_lineage};
    std::vector<std::set<NodeId>> neighbours(1);
    std::vector<Edge> edges;
    std::map<Cell, std::vector<NodeId>> grid;
    const double cell = p.anastomosis_radius > 0.0 ? p.anastomosis_radius : 1.0;

    auto cell_of = [&](const Point3& q) -> Cell {
        return {static_cast<long long>(std::floor(q.x / cell)),
                static_cast<long long>(std::floor(q.y / cell)),
                static_cast<long long>(std::floor(q.z / cell))};
    };
    auto connect = [&](NodeId a, NodeId b) {
        edges.push_back({a, b, distance(points[a], points[b])});
        neighbours[a].insert(b);
        neighbours[b].insert(a);
    };
    grid[cell_of(points[0])].push_back(0);

    std::uint32_t next_lineage = 0;
    std::vector<Tip> tips;
    for (int i = 0; i < p.n_tips_initial; ++i)
        tips.push_back({0, detail::random_direction(rng), next_lineage++});

    for (int step = 0; step < p.max_steps && !tips.empty(); ++step) {
        std::vector<Tip> next;
        for (const Tip& tip : tips) {
            const detail::Vec3 dir = detail::perturb(tip.dir, heading_noise, rng);
            const double len =
                std::max(0.25 * p.step_length_mean, rng.normal(p.step_length_mean, p.step_length_sd));
            const Point3& from = points[tip.node];
            const Point3 to{from.x + dir.x * len, from.y + dir.y * len, from.z + dir.z * len};
            if (distance(to, Point3{}) > p.bounding_radius) continue;

            if (p.anastomosis_radius > 0.0) {
                NodeId target = std::numeric_limits<NodeId>::max();
                double best = std::numeric_limits<double>::infinity();
                const auto [cx, cy, cz] = cell_of(to);
                for (long long i = cx - 1; i <= cx + 1; ++i) {
                    for (long long j = cy - 1; j <= cy + 1; ++j) {
                        for (long long k = cz - 1; k <= cz + 1; ++k) {
                            auto it = grid.find({i, j, k});
                            if (it == grid.end()) continue;
                            for (NodeId n : it->second) {
                                if (lineage[n] == tip.lineage || n == tip.node ||
                                    neighbours[tip.node].count(n))
                                    continue;
                                const double d = distance(points[n], to);
                                if (d <= p.anastomosis_radius && (d < best || (d == best && n < target))) {
                                    best = d;
                                    target = n;
                                }
                            }
                        }
                    }
                }
                if (target != std::numeric_limits<NodeId>::max()) {
                    connect(tip.node, target);
                    continue;
                }
            }

            const auto id = static_cast<NodeId>(points.size());
            points.push_back(to);
            lineage.push_back(tip.lineage);
            neighbours.emplace_back();
            grid[cell_of(to)].push_back(id);
            connect(tip.node, id);
            next.push_back({id, dir, tip.lineage});
            if (rng.bernoulli(p.branch_probability))
                next.push_back({id, detail::perturb(dir, branch_turn, rng), next_lineage++});
        }
        tips = std::move(next);
    }

    EuclideanGraph g(std::move(points), std::move(edges));
    if (terminals(g).size() < 2)
        throw DataError("synthetic colony: parameters produced fewer than 2 terminals");
    return g;
}

} // namespace fungate::colony
