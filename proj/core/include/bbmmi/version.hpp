#pragma once

namespace bbmmi {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace bbmmi
