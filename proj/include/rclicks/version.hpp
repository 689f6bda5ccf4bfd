#pragma once

namespace rclicks {

inline constexpr const char* kToolName = "rclicks";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace rclicks
