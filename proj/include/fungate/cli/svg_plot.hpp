#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <string>

#include "fungate/mining/census.hpp"

namespace fungate::cli {

struct PlotSeries {
    mining::GateGroup group;
    const char* colour;
};

/// AND black, OR green, AND-NOT red, SELECT blue.
inline constexpr std::array<PlotSeries, 4> plot_series = {{{mining::GateGroup::And, "black"},
                                                           {mining::GateGroup::Or, "green"},
                                                           {mining::GateGroup::AndNot, "red"},
                                                           {mining::GateGroup::Select, "blue"}}};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace detail

/**
 * Line plot of gate counts against theta. An empty census yields the axes
 * alone; a group with all-zero counts is drawn flat on the baseline.
 */
inline std::string census_svg(const mining::GateCensus& c) {
    constexpr double width = 640, height = 420;
    constexpr double left = 70, right = 130, top = 20, bottom = 50;
    constexpr double pw = width - left - right, ph = height - top - bottom;

    double tmin = 0.0, tmax = 1.0;
    std::uint64_t ymax = 0;
    if (!c.theta_grid.empty()) {
        tmin = c.theta_grid.front();
        tmax = c.theta_grid.back();
        for (const auto& row : c.counts) {
            for (const auto& s : plot_series) ymax = std::max(ymax, row[static_cast<std::size_t>(s.group)]);
        }
    }
    if (tmax <= tmin) tmax = tmin + 1.0;
    const double ytop = ymax > 0 ? static_cast<double>(ymax) : 1.0;
    auto px = [&](double t) { return left + (t - tmin) / (tmax - tmin) * pw; };
    auto py = [&](double n) { return top + ph - n / ytop * ph; };

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(width) + "\" height=\"" +
                    detail::num(height) + "\" viewBox=\"0 0 " + detail::num(width) + " " + detail::num(height) +
                    "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<g id=\"axes\" stroke=\"#444\" stroke-width=\"1\">\n";
    s += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(top + ph) + "\" x2=\"" +
         detail::num(left + pw) + "\" y2=\"" + detail::num(top + ph) + "\"/>\n";
    s += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(top) + "\" x2=\"" + detail::num(left) +
         "\" y2=\"" + detail::num(top + ph) + "\"/>\n";
    s += "</g>\n";
    s += "<g font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\">\n";
    s += "<text x=\"" + detail::num(left + pw / 2) + "\" y=\"" + detail::num(height - 12) +
         "\" text-anchor=\"middle\">threshold (V)</text>\n";
    s += "<text x=\"16\" y=\"" + detail::num(top + ph / 2) + "\" transform=\"rotate(-90 16 " +
         detail::num(top + ph / 2) + ")\" text-anchor=\"middle\">gates</text>\n";
    if (!c.theta_grid.empty()) {
        s += "<text x=\"" + detail::num(left) + "\" y=\"" + detail::num(top + ph + 16) +
             "\" text-anchor=\"middle\">" + general(tmin, 4) + "</text>\n";
        s += "<text x=\"" + detail::num(left + pw) + "\" y=\"" + detail::num(top + ph + 16) +
             "\" text-anchor=\"middle\">" + general(tmax, 4) + "</text>\n";
        s += "<text x=\"" + detail::num(left - 6) + "\" y=\"" + detail::num(top + 4) + "\" text-anchor=\"end\">" +
             std::to_string(ymax) + "</text>\n";
        s += "<text x=\"" + detail::num(left - 6) + "\" y=\"" + detail::num(top + ph + 4) +
             "\" text-anchor=\"end\">0</text>\n";
    }
    s += "</g>\n";

    if (!c.theta_grid.empty()) {
        for (std::size_t k = 0; k < plot_series.size(); ++k) {
            const auto& series = plot_series[k];
            s += "<polyline data-group=\"" + std::string(mining::group_name(series.group)) + "\" stroke=\"" +
                 series.colour + "\" fill=\"none\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < c.theta_grid.size(); ++i) {
                if (i) s += " ";
                const auto n = static_cast<double>(c.counts[i][static_cast<std::size_t>(series.group)]);
                s += detail::num(px(c.theta_grid[i])) + "," + detail::num(py(n));
            }
            s += "\"/>\n";
            const double ly = top + 14 + 18 * static_cast<double>(k);
            s += "<line x1=\"" + detail::num(left + pw + 12) + "\" y1=\"" + detail::num(ly - 4) + "\" x2=\"" +
                 detail::num(left + pw + 32) + "\" y2=\"" + detail::num(ly - 4) + "\" stroke=\"" + series.colour +
                 "\" stroke-width=\"1.5\"/>\n";
            s += "<text x=\"" + detail::num(left + pw + 38) + "\" y=\"" + detail::num(ly) +
                 "\" font-family=\"sans-serif\" font-size=\"12\">" + std::string(mining::group_name(series.group)) +
                 "</text>\n";
        }
    }
    s += "</svg>\n";
    return s;
}

} // namespace fungate::cli
