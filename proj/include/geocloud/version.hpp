#pragma once

namespace geocloud {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace geocloud
