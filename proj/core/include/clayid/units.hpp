#pragma once

// Material parameters are stored in the units the source tables use
// (kPa, GPa, mm, g). Conversion to SI happens exactly once, at solver
// entry, through these constants.

namespace clayid::units {

inline constexpr double kPaToPa = 1.0e3;
inline constexpr double GPaToPa = 1.0e9;
inline constexpr double mmToM = 1.0e-3;
inline constexpr double mToMm = 1.0e3;
inline constexpr double gToKg = 1.0e-3;

}  // namespace clayid::units
