#pragma once

namespace symphony {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kCheckpointSchemaVersion = 1;

}  // namespace symphony
