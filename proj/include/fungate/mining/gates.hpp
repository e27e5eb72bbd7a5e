#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

#include "fungate/error.hpp"

namespace fungate::mining {

/// Output voltages for the input pairs (x,y) = 00, 01, 10, 11.
using Samples4 = std::array<double, 4>;

inline constexpr std::size_t pair_slot(int x, int y) { return static_cast<std::size_t>(2 * x + y); }

/// Response of one output site, bits ordered f00, f01, f10, f11.
struct TruthTable4 {
    std::array<std::uint8_t, 4> bits{};

    std::uint8_t at(int x, int y) const { return bits[pair_slot(x, y)]; }
    /// f00*8 + f01*4 + f10*2 + f11
    int id() const { return bits[0] * 8 + bits[1] * 4 + bits[2] * 2 + bits[3]; }

    friend bool operator==(const TruthTable4&, const TruthTable4&) = default;
};

enum class GateGroup : std::uint8_t { And, Or, AndNot, Select, Xor, Const0, Active };

inline constexpr std::size_t gate_group_count = 7;

inline constexpr std::array<GateGroup, gate_group_count> all_gate_groups = {
    GateGroup::And, GateGroup::Or, GateGroup::AndNot, GateGroup::Select,
    GateGroup::Xor, GateGroup::Const0, GateGroup::Active};

/// Column names used in census CSVs.
inline constexpr std::string_view group_name(GateGroup g) {
    switch (g) {
    case GateGroup::And: return "and";
    case GateGroup::Or: return "or";
    case GateGroup::AndNot: return "and_not";
    case GateGroup::Select: return "select";
    case GateGroup::Xor: return "xor";
    case GateGroup::Const0: return "const0";
    case GateGroup::Active: return "active";
    }
    return "?";
}

inline GateGroup group_from_name(std::string_view name) {
    for (GateGroup g : all_gate_groups) {
        if (group_name(g) == name) return g;
    }
    throw ConfigError("unknown gate group '" + std::string(name) + "'");
}

struct GateClass {
    int id = 0;
    GateGroup group = GateGroup::Const0;
};

/// Group of each truth-table id (f00*8 + f01*4 + f10*2 + f11). Any table
/// with f(0,0) = 1 needs an active element and falls in Active.
inline constexpr std::array<GateGroup, 16> group_by_id = [] {
    std::array<GateGroup, 16> t{};
    for (auto& g : t) g = GateGroup::Active;
    t[0b0000] = GateGroup::Const0;
    t[0b0001] = GateGroup::And;
    t[0b0010] = GateGroup::AndNot; // x and not y
    t[0b0011] = GateGroup::Select; // x
    t[0b0100] = GateGroup::AndNot; // not x and y
    t[0b0101] = GateGroup::Select; // y
    t[0b0110] = GateGroup::Xor;
    t[0b0111] = GateGroup::Or;
    return t;
}();

/// Bit is 1 iff the voltage strictly exceeds theta.
inline TruthTable4 binarize(const Samples4& v, double theta) {
    if (!(theta > 0.0)) throw ConfigError("binarization threshold must be positive");
    TruthTable4 t;
    for (std::size_t i = 0; i < 4; ++i) t.bits[i] = v[i] > theta ? 1 : 0;
    return t;
}

inline GateClass classify(const TruthTable4& t) {
    const int id = t.id();
    return {id, group_by_id[static_cast<std::size_t>(id)]};
}

} // namespace fungate::mining
