#pragma once

namespace hfedf {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hfedf
