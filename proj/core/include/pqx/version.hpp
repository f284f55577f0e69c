#pragma once

namespace pqx {
inline constexpr const char* kVersion = "0.1.0";
}
