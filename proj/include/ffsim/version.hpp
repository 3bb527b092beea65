#pragma once

namespace ffsim {

inline constexpr const char* kVersion = "ffsim 0.1.0";

}  // namespace ffsim
