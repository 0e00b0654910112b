#pragma once

namespace uvloss {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace uvloss
