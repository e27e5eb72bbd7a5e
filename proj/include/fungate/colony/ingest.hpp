#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "fungate/colony/graph.hpp"
#include "fungate/error.hpp"

namespace fungate::colony {

/// Micrometres per voxel index along each axis.
struct VoxelPitch {
    double dx = 0.0;
    double dy = 0.0;
    double dz = 0.0;

    void validate() const {
        if (!(dx > 0.0 && dy > 0.0 && dz > 0.0) || !std::isfinite(dx) || !std::isfinite(dy) ||
            !std::isfinite(dz))
            throw ConfigError("voxel pitch must be strictly positive and finite");
    }

    Point3 to_world(const std::array<double, 3>& voxel) const {
        return {voxel[0] * dx, voxel[1] * dy, voxel[2] * dz};
    }
};

/// Slice thickness of the confocal z-stacks.
inline constexpr double default_slice_thickness_um = 8.35;
inline constexpr double default_merge_tolerance_um = 0.5;

struct BranchRecord {
    long network_id = 0;
    long branch_id = 0;
    std::array<double, 3> start_voxel{};
    std::array<double, 3> end_voxel{};
    std::optional<double> path_length_voxels;
};

/**
 * Unifies endpoints closer than a tolerance into a single node.
 *
 * Node ids are assigned in first-seen order and each node keeps the
 * coordinates of its first occurrence, so every pair of nodes is more than
 * `tolerance` apart and re-merging the output is a no-op. A zero tolerance
 * unifies only coincident points.
 */
class NodeMerger {
public:
    explicit NodeMerger(double tolerance) : tolerance_(tolerance) {
        if (!(tolerance >= 0.0) || !std::isfinite(tolerance))
            throw ConfigError("merge tolerance must be finite and non-negative");
        cell_ = tolerance > 0.0 ? tolerance : 1.0;
    }

    NodeId add(const Point3& p) {
        const auto key = cell_of(p);
        for (int i = -1; i <= 1; ++i) {
            for (int j = -1; j <= 1; ++j) {
                for (int k = -1; k <= 1; ++k) {
                    auto it = grid_.find({std::get<0>(key) + i, std::get<1>(key) + j,
                                          std::get<2>(key) + k});
                    if (it == grid_.end()) continue;
                    for (NodeId id : it->second) {
                        if (distance(points_[id], p) <= tolerance_) return id;
                    }
                }
            }
        }
        const auto id = static_cast<NodeId>(points_.size());
        points_.push_back(p);
        grid_[key].push_back(id);
        return id;
    }

    const std::vector<Point3>& points() const { return points_; }
    std::vector<Point3> take_points() { return std::move(points_); }

private:
    using Cell = std::tuple<long long, long long, long long>;

    Cell cell_of(const Point3& p) const {
        return {static_cast<long long>(std::floor(p.x / cell_)),
                static_cast<long long>(std::floor(p.y / cell_)),
                static_cast<long long>(std::floor(p.z / cell_))};
    }

    double tolerance_;
    double cell_;
    std::vector<Point3> points_;
    std::map<Cell, std::vector<NodeId>> grid_;
};

struct IngestResult {
    EuclideanGraph graph;
    std::size_t rejected_records = 0; // collapsed to zero length by merging
    std::size_t network_count = 0;    // distinct network_id values seen
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
}

template <typename T>
inline bool parse_number(std::string_view s, T& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc() && ptr == end && !s.empty();
}

} // namespace detail

/// Parses one data row of the branch table (columns
/// network_id,branch_id,x1,y1,z1,x2,y2,z2[,length_voxels]).
inline BranchRecord parse_branch_row(std::string_view line, std::size_t row) {
    const auto fields = detail::split(line, ',');
    if (fields.size() != 8 && fields.size() != 9)
        throw ParseError(row, "expected 8 or 9 fields, found " + std::to_string(fields.size()));

    BranchRecord rec;
    if (!detail::parse_number(fields[0], rec.network_id))
        throw ParseError(row, "network_id is not an integer");
    if (!detail::parse_number(fields[1], rec.branch_id))
        throw ParseError(row, "branch_id is not an integer");
    for (int i = 0; i < 3; ++i) {
        double& s = rec.start_voxel[i];
        double& e = rec.end_voxel[i];
        if (!detail::parse_number(fields[2 + i], s) || !detail::parse_number(fields[5 + i], e) ||
            !std::isfinite(s) || !std::isfinite(e))
            throw ParseError(row, "voxel coordinate is not a number");
        if (s < 0.0 || e < 0.0) throw ParseError(row, "negative voxel index");
    }
    if (fields.size() == 9 && !fields[8].empty()) {
        double len = 0.0;
        if (!detail::parse_number(fields[8], len) || !std::isfinite(len) || len < 0.0)
            throw ParseError(row, "length_voxels is not a non-negative number");
        rec.path_length_voxels = len;
    }
    return rec;
}

/**
 * Reads a skeleton branch table into a Euclidean graph.
 *
 * Endpoints are converted to micrometres with `pitch` and merged within
 * `merge_tolerance`. When the row carries a path length in voxels it is
 * converted with the branch's own voxel-to-world chord ratio (a single
 * scale along the branch direction); otherwise the edge length is the chord
 * between the merged endpoints. Branches that collapse onto one node are
 * dropped and counted in `rejected_records`.
 */
inline IngestResult parse_branch_table(std::istream& in, const VoxelPitch& pitch,
                                       double merge_tolerance = default_merge_tolerance_um) {
    pitch.validate();
    NodeMerger merger(merge_tolerance);
    std::vector<Edge> edges;
    IngestResult result;
    std::map<long, bool> networks;

    std::string line;
    std::size_t row = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++row;
        const auto trimmed = detail::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        if (first_content) {
            first_content = false;
            const auto first = detail::split(trimmed, ',').front();
            double probe = 0.0;
            if (!detail::parse_number(first, probe)) continue; // header row
        }
        const BranchRecord rec = parse_branch_row(trimmed, row);
        networks[rec.network_id] = true;

        const Point3 a = pitch.to_world(rec.start_voxel);
        const Point3 b = pitch.to_world(rec.end_voxel);
        const NodeId u = merger.add(a);
        const NodeId v = merger.add(b);
        if (u == v) {
            ++result.rejected_records;
            continue;
        }
        const double chord = distance(merger.points()[u], merger.points()[v]);
        double length = chord;
        if (rec.path_length_voxels) {
            const double dv0 = rec.end_voxel[0] - rec.start_voxel[0];
            const double dv1 = rec.end_voxel[1] - rec.start_voxel[1];
            const double dv2 = rec.end_voxel[2] - rec.start_voxel[2];
            const double voxel_chord = std::sqrt(dv0 * dv0 + dv1 * dv1 + dv2 * dv2);
            if (*rec.path_length_voxels < voxel_chord - 1e-9)
                throw ParseError(row, "length_voxels is shorter than the endpoint distance");
            if (voxel_chord > 0.0)
                length = std::max(chord, *rec.path_length_voxels * distance(a, b) / voxel_chord);
        }
        edges.push_back({u, v, length});
    }
    result.network_count = networks.size();
    result.graph = EuclideanGraph(merger.take_points(), std::move(edges));
    return result;
}

inline IngestResult parse_branch_table(const std::string& text, const VoxelPitch& pitch,
                                       double merge_tolerance = default_merge_tolerance_um) {
    std::istringstream in(text);
    return parse_branch_table(in, pitch, merge_tolerance);
}

/// Graph JSON: {"nodes":[{"id","x","y","z"}],"edges":[{"u","v","len"}]}.
/// Numbers are written in shortest round-trip form, so values reload exactly.
inline std::string to_json(const EuclideanGraph& g) {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    for (NodeId i = 0; i < g.node_count(); ++i) {
        const Point3& p = g.point(i);
        j["nodes"].push_back({{"id", i}, {"x", p.x}, {"y", p.y}, {"z", p.z}});
    }
    j["edges"] = nlohmann::ordered_json::array();
    for (const Edge& e : g.edges()) j["edges"].push_back({{"u", e.u}, {"v", e.v}, {"len", e.length}});
    return j.dump(1) + "\n";
}

/**
 * Loads a graph JSON document.
 *
 * Without a merge tolerance node ids are kept verbatim (they must be dense).
 * With one, nodes are re-merged in id order through the same merger used for
 * branch tables and edges are remapped; zero-length edges are dropped.
 */
inline IngestResult read_graph_json(const std::string& text,
                                    std::optional<double> merge_tolerance = std::nullopt) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("graph JSON: ") + e.what());
    }
    try {
        const auto& jn = j.at("nodes");
        std::vector<Point3> points(jn.size());
        std::vector<char> seen(jn.size(), 0);
        for (const auto& n : jn) {
            const auto id = n.at("id").get<long long>();
            if (id < 0 || static_cast<std::size_t>(id) >= jn.size() || seen[id])
                throw DataError("graph JSON: node ids must be dense and unique");
            seen[id] = 1;
            points[id] = {n.at("x").get<double>(), n.at("y").get<double>(), n.at("z").get<double>()};
        }
        std::vector<Edge> edges;
        for (const auto& e : j.at("edges")) {
            const auto u = e.at("u").get<long long>();
            const auto v = e.at("v").get<long long>();
            if (u < 0 || v < 0) throw DataError("graph JSON: negative node id in edge");
            edges.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), e.at("len").get<double>()});
        }

        IngestResult result;
        result.network_count = 0;
        if (!merge_tolerance) {
            result.graph = EuclideanGraph(std::move(points), std::move(edges));
        } else {
            NodeMerger merger(*merge_tolerance);
            std::vector<NodeId> remap(points.size());
            for (std::size_t i = 0; i < points.size(); ++i) remap[i] = merger.add(points[i]);
            std::vector<Edge> merged;
            for (const Edge& e : edges) {
                if (e.u >= points.size() || e.v >= points.size())
                    throw DataError("graph JSON: edge references an unknown node");
                if (remap[e.u] == remap[e.v]) {
                    ++result.rejected_records;
                    continue;
                }
                merged.push_back({remap[e.u], remap[e.v], e.length});
            }
            result.graph = EuclideanGraph(merger.take_points(), std::move(merged));
        }
        result.network_count = components(result.graph).size();
        return result;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("graph JSON: ") + e.what());
    }
}

} // namespace fungate::colony
