// Shared vocabulary types for the skelfield library.
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace skf {

using Vec3 = Eigen::Vector3d;
using Rng = std::mt19937_64;

/// Bad input: malformed files, violated preconditions. Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite losses, degenerate numerical states. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

/// Uniform double in [0, 1) using the top 53 bits of the generator.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

inline Vec3 uniform_in_box(Rng& rng, const Vec3& lo, const Vec3& hi) {
  return {uniform(rng, lo.x(), hi.x()), uniform(rng, lo.y(), hi.y()),
          uniform(rng, lo.z(), hi.z())};
}

/// Axis index 0,1,2 -> 'x','y','z'.
inline char axis_name(int axis) { return static_cast<char>('x' + axis); }

}  // namespace skf
