#pragma once

namespace fisherq {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace fisherq
