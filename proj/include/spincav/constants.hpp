#pragma once

#include <numbers>

namespace spincav {

// CODATA 2018 exact / recommended values, SI units.
inline constexpr double kPlanck = 6.62607015e-34;      // J s
inline constexpr double kBoltzmann = 1.380649e-23;     // J/K
inline constexpr double kBohrMagneton = 9.2740100783e-24;  // J/T
inline constexpr double kSpeedOfLight = 299792458.0;   // m/s
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Frequencies at the boundary are ordinary (Hz); everything inside the
// solvers is angular (rad/s).
constexpr double angular(double hz) { return kTwoPi * hz; }
constexpr double ordinary(double rad_per_s) { return rad_per_s / kTwoPi; }

}  // namespace spincav
