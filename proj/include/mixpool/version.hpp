#pragma once

namespace mixpool {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace mixpool
