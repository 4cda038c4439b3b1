#pragma once

namespace atomplane {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace atomplane
