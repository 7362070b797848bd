#pragma once

#include <cmath>
#include <numbers>

namespace socnav {

// Normalizes an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a <= 0.0) a += two_pi;
  return a - std::numbers::pi;
}

// Smallest signed difference a - b, in (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

// Mean of two angles on the unit circle.
inline double circular_mean(double a, double b) {
  return std::atan2(std::sin(a) + std::sin(b), std::cos(a) + std::cos(b));
}

}  // namespace socnav
