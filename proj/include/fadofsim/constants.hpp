#pragma once

namespace fadofsim::phys {

// CODATA 2018 exact / recommended values, SI units.
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;
inline constexpr double speed_of_light = 299792458.0;
inline constexpr double planck = 6.62607015e-34;
inline constexpr double hbar = planck / two_pi;
inline constexpr double boltzmann = 1.380649e-23;
inline constexpr double vacuum_permittivity = 8.8541878128e-12;
inline constexpr double bohr_magneton = 9.2740100783e-24;
inline constexpr double torr = 133.32236842105263;  // Pa
inline constexpr double ln2 = 0.69314718055994530942;

}  // namespace fadofsim::phys
