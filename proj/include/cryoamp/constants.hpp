#pragma once

#include <numbers>

namespace cryoamp::constants {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// CODATA 2018
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m

}  // namespace cryoamp::constants
