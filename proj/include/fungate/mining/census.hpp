#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "fungate/colony/ingest.hpp"
#include "fungate/error.hpp"
#include "fungate/format.hpp"
#include "fungate/mining/gates.hpp"

namespace fungate::mining {

/// theta_i = min + i * step for i = 0 .. floor((max - min) / step).
inline std::vector<double> make_theta_grid(double min, double max, double step) {
    if (!(min > 0.0) || !(step > 0.0) || !(max >= min) || !std::isfinite(max))
        throw ConfigError("theta grid needs 0 < min <= max and step > 0");
    const auto n = static_cast<std::size_t>(std::floor((max - min) / step + 1e-9)) + 1;
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = min + static_cast<double>(i) * step;
    return grid;
}

/// Sweep from the published figure: 0.0001 .. 0.05 V in 0.0001 V steps.
inline std::vector<double> default_theta_grid() { return make_theta_grid(1e-4, 0.05, 1e-4); }

/**
 * Gate counts per threshold and group. Every (trial, output site) pair adds
 * exactly one classification at every theta, so each row sums to
 * `output_site_count` (the number of classified pairs).
 */
struct GateCensus {
    using Row = std::array<std::uint64_t, gate_group_count>;

    std::vector<double> theta_grid;
    std::vector<Row> counts; // one row per theta
    std::uint64_t trial_count = 0;
    std::uint64_t output_site_count = 0;

    GateCensus() = default;
    explicit GateCensus(std::vector<double> grid)
        : theta_grid(std::move(grid)), counts(theta_grid.size(), Row{}) {}

    void add(const Samples4& v) {
        for (std::size_t i = 0; i < theta_grid.size(); ++i) {
            const double th = theta_grid[i];
            const int id = (v[0] > th) * 8 + (v[1] > th) * 4 + (v[2] > th) * 2 + (v[3] > th);
            ++counts[i][static_cast<std::size_t>(group_by_id[static_cast<std::size_t>(id)])];
        }
        ++output_site_count;
    }

    void merge(const GateCensus& other) {
        if (other.theta_grid != theta_grid) throw ConfigError("census merge: theta grids differ");
        for (std::size_t i = 0; i < counts.size(); ++i) {
            for (std::size_t g = 0; g < gate_group_count; ++g) counts[i][g] += other.counts[i][g];
        }
        trial_count += other.trial_count;
        output_site_count += other.output_site_count;
    }

    std::size_t theta_index(double theta) const {
        for (std::size_t i = 0; i < theta_grid.size(); ++i) {
            if (std::abs(theta_grid[i] - theta) <= 1e-9 * std::max(1.0, std::abs(theta))) return i;
        }
        throw ConfigError("theta " + shortest(theta) + " is not on the census grid");
    }

    std::uint64_t row_total(std::size_t i) const {
        std::uint64_t s = 0;
        for (auto c : counts[i]) s += c;
        return s;
    }

    friend bool operator==(const GateCensus&, const GateCensus&) = default;
};

inline std::uint64_t census_counts(const GateCensus& c, GateGroup group, double theta) {
    return c.counts[c.theta_index(theta)][static_cast<std::size_t>(group)];
}

inline constexpr std::string_view census_header = "theta,and,or,and_not,select,xor,const0,active,total";

/// Theta is printed with 10 significant digits so grid values read cleanly
/// (0.0003 rather than 0.00030000000000000003).
inline std::string census_to_csv(const GateCensus& c) {
    std::string out(census_header);
    out += "\n";
    for (std::size_t i = 0; i < c.theta_grid.size(); ++i) {
        out += general(c.theta_grid[i], 10);
        for (GateGroup g : all_gate_groups) out += "," + std::to_string(c.counts[i][static_cast<std::size_t>(g)]);
        out += "," + std::to_string(c.row_total(i)) + "\n";
    }
    return out;
}

/// Reads a census CSV back. Trial count is not stored in the CSV and is left
/// at zero; output_site_count is taken from the first row's total.
inline GateCensus census_from_csv(std::istream& in) {
    std::string line;
    std::size_t row = 0;
    GateCensus c;
    bool header = false;
    while (std::getline(in, line)) {
        ++row;
        const auto t = colony::detail::trim(line);
        if (t.empty()) continue;
        if (!header) {
            if (t != census_header) throw ParseError(row, "expected census header '" + std::string(census_header) + "'");
            header = true;
            continue;
        }
        const auto f = colony::detail::split(t, ',');
        if (f.size() != gate_group_count + 2) throw ParseError(row, "expected 9 fields");
        double theta = 0.0;
        if (!colony::detail::parse_number(f[0], theta) || !(theta > 0.0))
            throw ParseError(row, "bad theta value");
        GateCensus::Row r{};
        std::uint64_t sum = 0;
        for (std::size_t g = 0; g < gate_group_count; ++g) {
            if (!colony::detail::parse_number(f[g + 1], r[g])) throw ParseError(row, "bad count");
            sum += r[g];
        }
        std::uint64_t total = 0;
        if (!colony::detail::parse_number(f[gate_group_count + 1], total) || total != sum)
            throw ParseError(row, "total does not match the group counts");
        c.theta_grid.push_back(theta);
        c.counts.push_back(r);
        if (c.counts.size() == 1) c.output_site_count = total;
    }
    if (!header) throw ParseError(row, "missing census header");
    return c;
}

inline GateCensus census_from_csv(const std::string& text) {
    std::istringstream in(text);
    return census_from_csv(in);
}

} // namespace fungate::mining
