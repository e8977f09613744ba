#pragma once

namespace qht {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kVersionString = "qht-gof 0.1.0";

}  // namespace qht
