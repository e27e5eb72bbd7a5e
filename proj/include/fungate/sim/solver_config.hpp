#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <string_view>

#include "fungate/error.hpp"

namespace fungate::sim {

enum class Integration { Trapezoidal, BackwardEuler };

inline std::string_view to_string(Integration m) {
    return m == Integration::Trapezoidal ? "trapezoidal" : "backward_euler";
}

inline Integration integration_from_string(std::string_view s) {
    if (s == "trapezoidal" || s == "trap") return Integration::Trapezoidal;
    if (s == "backward_euler" || s == "be") return Integration::BackwardEuler;
    throw ConfigError("unknown integration method '" + std::string(s) + "'");
}

/// Fixed-step transient settings. Defaults: 40 s at 1 ms, trapezoidal.
struct SolverConfig {
    double dt = 1e-3;
    double t_stop = 40.0;
    Integration method = Integration::Trapezoidal;
    std::size_t record_stride = 1; // keep every k-th step in TransientResult

    void validate() const {
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
        if (!(t_stop >= dt) || !std::isfinite(t_stop)) throw ConfigError("t_stop must be >= dt");
        if (t_stop / dt > static_cast<double>(std::numeric_limits<long long>::max() / 2))
            throw ConfigError("t_stop/dt overflows the step counter");
        if (record_stride == 0) throw ConfigError("record_stride must be >= 1");
    }

    /// Index of the last step, floor(t_stop/dt) with a guard against
    /// representation error (40/0.001 must give 40000).
    std::size_t last_step() const {
        return static_cast<std::size_t>(std::floor(t_stop / dt + 1e-9));
    }

    /// Number of time points including t = 0.
    std::size_t step_count() const { return last_step() + 1; }

    double time_at(std::size_t k) const { return static_cast<double>(k) * dt; }
};

} // namespace fungate::sim
