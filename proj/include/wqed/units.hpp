#pragma once

#include <numbers>

// Internal unit system: time in ns, every rate or frequency in rad/ns.
// Anything user facing (config files, CLI flags, exported tables) uses
// ordinary frequencies in MHz or GHz.

namespace wqed {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Ordinary MHz to angular rad/ns.
inline constexpr double kMhzToAngular = kTwoPi * 1.0e-3;

constexpr double mhz_to_angular(double mhz) { return mhz * kMhzToAngular; }
constexpr double angular_to_mhz(double omega) { return omega / kMhzToAngular; }

} // namespace wqed
