#pragma once

namespace stainkit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace stainkit
