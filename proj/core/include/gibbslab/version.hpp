#pragma once

namespace gibbslab {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace gibbslab
