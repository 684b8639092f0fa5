#pragma once

namespace engrank {

inline constexpr const char* kToolName = "engage-rank";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace engrank
