#pragma once

namespace dsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dsim
