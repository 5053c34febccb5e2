#pragma once

namespace dualfill {

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace dualfill
