#pragma once

namespace dpu {
inline constexpr const char* kToolName = "dpu";
inline constexpr const char* kVersion = "0.1.0";
}  // namespace dpu
