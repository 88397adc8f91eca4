#pragma once

namespace voxmorph {

inline constexpr const char* kVersion = "0.1.0";

} // namespace voxmorph
