#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rvm {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Raised for malformed external inputs (files, manifests, configs), as
// opposed to std::invalid_argument for API misuse.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Wrap into [0, 2*pi).
inline double wrap_two_pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a;
}

// Wrap into (-pi, pi].
inline double wrap_pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a <= -kPi) a += kTwoPi;
  if (a > kPi) a -= kTwoPi;
  return a;
}

// Wrap an undirected orientation into [0, pi).
inline double wrap_orientation(double a) {
  a = std::fmod(a, kPi);
  if (a < 0) a += kPi;
  return a;
}

// Principal-value difference of two undirected orientations, in (-pi/2, pi/2].
inline double orientation_diff(double a, double b) {
  double d = std::fmod(a - b, kPi);
  if (d <= -kPi / 2) d += kPi;
  if (d > kPi / 2) d -= kPi;
  return d;
}

// Smallest absolute difference between two directions in [0, 2*pi).
inline double direction_distance(double a, double b) {
  return std::fabs(wrap_pi(a - b));
}

// 8-bit quantization used only on file export: round half away from zero.
inline std::uint8_t quantize_u8(double v) {
  double q = std::floor(v + 0.5);
  return static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
}

inline double clamp255(double v) { return std::clamp(v, 0.0, 255.0); }

}  // namespace rvm
