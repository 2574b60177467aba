#pragma once

namespace tsc {

inline constexpr const char* kVersionString = "tsc 0.1.0";

}  // namespace tsc
