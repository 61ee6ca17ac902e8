#pragma once

namespace csgnn {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace csgnn
