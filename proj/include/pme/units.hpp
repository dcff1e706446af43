// units.hpp — Internal unit system: energies in 1/cm, times in fs

#pragma once

namespace pme::units {

// Speed of light in cm/fs.
inline constexpr double speed_of_light_cm_fs = 2.99792458e-5;

// Phase accumulated per (1/cm of energy) per fs: phase(E, t) = kappa * E * t.
inline constexpr double kappa = 2.0 * 3.14159265358979323846 * speed_of_light_cm_fs;

inline constexpr double mev_to_invcm = 8.06554;

inline constexpr double mev_to_cm(double mev) { return mev * mev_to_invcm; }
inline constexpr double cm_to_mev(double cm) { return cm / mev_to_invcm; }

} // namespace pme::units
