#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fungate/error.hpp"
#include "fungate/format.hpp"
#include "fungate/mining/census.hpp"

namespace fungate::mining {

enum class FitModel { PowerLaw, Linear, Quadratic };

inline std::string to_string(FitModel m) {
    switch (m) {
    case FitModel::PowerLaw: return "power_law";
    case FitModel::Linear: return "linear";
    case FitModel::Quadratic: return "quadratic";
    }
    return "?";
}

/// power_law: a * x^b; linear: a + b x; quadratic: a + b x + c x^2.
struct FitResult {
    FitModel model = FitModel::Linear;
    std::array<double, 3> coefficients{};
    double r_squared = 0.0;

    double a() const { return coefficients[0]; }
    double b() const { return coefficients[1]; }
    double c() const { return coefficients[2]; }

    double evaluate(double x) const {
        switch (model) {
        case FitModel::PowerLaw: return a() * std::pow(x, b());
        case FitModel::Linear: return a() + b() * x;
        case FitModel::Quadratic: return a() + b() * x + c() * x * x;
        }
        return 0.0;
    }
};

using Point2 = std::pair<double, double>;

namespace detail {

/// Least squares on a polynomial basis of the given degree (QR, so the
/// badly scaled theta columns stay accurate). Returns coefficients and R^2
/// in the space of (x, y) supplied.
inline std::pair<std::vector<double>, double> polyfit(std::span<const double> x, std::span<const double> y,
                                                      int degree) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd design(n, degree + 1);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double p = 1.0;
        for (int d = 0; d <= degree; ++d) {
            design(i, d) = p;
            p *= x[static_cast<std::size_t>(i)];
        }
        rhs(i) = y[static_cast<std::size_t>(i)];
    }
    // column scaling keeps x^2 columns of order one for tiny x
    Eigen::VectorXd scale = design.colwise().norm().transpose();
    for (Eigen::Index d = 0; d < scale.size(); ++d) {
        if (scale(d) == 0.0) scale(d) = 1.0;
    }
    const Eigen::MatrixXd scaled = design * scale.cwiseInverse().asDiagonal();
    const Eigen::VectorXd sol = scaled.colPivHouseholderQr().solve(rhs).cwiseQuotient(scale);

    const double mean = rhs.mean();
    const double ss_tot = (rhs.array() - mean).square().sum();
    const double ss_res = (design * sol - rhs).squaredNorm();
    double r2;
    if (ss_tot <= 0.0)
        r2 = ss_res <= 1e-24 * std::max(1.0, rhs.squaredNorm()) ? 1.0 : 0.0;
    else
        r2 = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
    return {std::vector<double>(sol.data(), sol.data() + sol.size()), r2};
}

inline void require_points(std::span<const Point2> pts, const char* what) {
    if (pts.size() < 3) throw DataError(std::string(what) + ": need at least 3 points");
    for (const auto& [x, y] : pts) {
        if (!std::isfinite(x) || !std::isfinite(y)) throw DataError(std::string(what) + ": non-finite point");
    }
}

} // namespace detail

/// Straight line through (ln x, ln y); R^2 is reported in log space.
inline FitResult fit_power_law(std::span<const Point2> pts) {
    detail::require_points(pts, "power-law fit");
    std::vector<double> lx, ly;
    for (const auto& [x, y] : pts) {
        if (!(x > 0.0) || !(y > 0.0)) throw DataError("power-law fit: x and y must be positive");
        lx.push_back(std::log(x));
        ly.push_back(std::log(y));
    }
    const auto [coef, r2] = detail::polyfit(lx, ly, 1);
    return {FitModel::PowerLaw, {std::exp(coef[0]), coef[1], 0.0}, r2};
}

inline FitResult fit_linear(std::span<const Point2> pts) {
    detail::require_points(pts, "linear fit");
    std::vector<double> x, y;
    for (const auto& p : pts) {
        x.push_back(p.first);
        y.push_back(p.second);
    }
    const auto [coef, r2] = detail::polyfit(x, y, 1);
    return {FitModel::Linear, {coef[0], coef[1], 0.0}, r2};
}

inline FitResult fit_quadratic(std::span<const Point2> pts) {
    detail::require_points(pts, "quadratic fit");
    std::vector<double> x, y;
    for (const auto& p : pts) {
        x.push_back(p.first);
        y.push_back(p.second);
    }
    const auto [coef, r2] = detail::polyfit(x, y, 2);
    return {FitModel::Quadratic, {coef[0], coef[1], coef[2]}, r2};
}

struct GroupFit {
    GateGroup group;
    FitResult fit;
};

/// Groups plotted in the census figure.
inline constexpr std::array<GateGroup, 4> fitted_groups = {GateGroup::And, GateGroup::Or, GateGroup::AndNot,
                                                          GateGroup::Select};

/**
 * Trend fits of count versus theta for each plotted group that has any
 * non-zero count: power law over the positive counts (when at least three),
 * plus linear and quadratic over all grid points.
 */
inline std::vector<GroupFit> fit_census(const GateCensus& c) {
    std::vector<GroupFit> out;
    for (GateGroup g : fitted_groups) {
        std::vector<Point2> all, positive;
        for (std::size_t i = 0; i < c.theta_grid.size(); ++i) {
            const auto n = static_cast<double>(c.counts[i][static_cast<std::size_t>(g)]);
            all.emplace_back(c.theta_grid[i], n);
            if (n > 0.0) positive.emplace_back(c.theta_grid[i], n);
        }
        if (positive.empty()) continue;
        if (positive.size() >= 3) out.push_back({g, fit_power_law(positive)});
        if (all.size() >= 3) {
            out.push_back({g, fit_linear(all)});
            out.push_back({g, fit_quadratic(all)});
        }
    }
    return out;
}

/// CSV `group,model,a,b,c,r_squared`; c is empty for two-parameter models.
inline std::string fits_to_csv(const std::vector<GroupFit>& fits) {
    std::string out = "group,model,a,b,c,r_squared\n";
    for (const auto& f : fits) {
        out += std::string(group_name(f.group)) + "," + to_string(f.fit.model) + "," + general(f.fit.a(), 12) +
               "," + general(f.fit.b(), 12) + "," +
               (f.fit.model == FitModel::Quadratic ? general(f.fit.c(), 12) : std::string()) + "," +
               general(f.fit.r_squared, 12) + "\n";
    }
    return out;
}

} // namespace fungate::mining
