#pragma once

namespace crownbench {
inline constexpr const char* kVersion = "0.3.0";
}
