#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace fungate {

/**
 * SplitMix64 generator.
 *
 * Used instead of the <random> distributions because those are not
 * reproducible across standard library implementations; every draw here
 * is fully specified so seeds give identical graphs and trial
 * assignments on any platform.
 */
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, bound); bound must be > 0.
    std::uint64_t below(std::uint64_t bound) {
        const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % bound;
        std::uint64_t r = next();
        while (r >= limit) r = next();
        return r % bound;
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Box-Muller; consumes exactly two draws per call.
    double normal(double mean, double sd) {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

/// Counter-based seed derivation: the stream for `index` depends only on
/// (master, index), so trials can run in any order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    SplitMix64 a(master ^ 0x6A09E667F3BCC909ULL);
    const std::uint64_t salt = a.next();
    SplitMix64 b(salt + index * 0xD1B54A32D192ED03ULL);
    b.next();
    return b.next();
}

} // namespace fungate
