#pragma once

namespace pentrace {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pentrace
