#pragma once

namespace dhom {
inline constexpr const char* kVersion = "0.1.0";
}
