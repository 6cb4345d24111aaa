#pragma once

namespace noisefit {

inline constexpr const char* kVersion = "0.1.0";

} // namespace noisefit
