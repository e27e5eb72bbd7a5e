#pragma once

namespace fungate {

inline constexpr const char* version = "0.1.0";

} // namespace fungate
