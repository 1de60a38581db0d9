#pragma once

namespace sre {
inline constexpr const char* kVersion = "0.1.0";
}
