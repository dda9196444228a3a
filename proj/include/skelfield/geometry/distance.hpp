// Point-segment distance and Chamfer-L1 between point sets.
#pragma once

#include "skelfield/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace skf {

/// Distance from p to the closest point of segment ab; a == b is allowed.
inline double point_to_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

inline double nearest_distance(const Vec3& p, std::span<const Vec3> set) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& q : set) best = std::min(best, (p - q).squaredNorm());
  return std::sqrt(best);
}

/// Mean over `from` of the distance to the nearest point of `to`.
inline double mean_nearest_distance(std::span<const Vec3> from,
                                    std::span<const Vec3> to) {
  double acc = 0.0;
  for (const auto& p : from) acc += nearest_distance(p, to);
  return acc / static_cast<double>(from.size());
}

/// 0.5 * (mean_{a in A} d(a, B) + mean_{b in B} d(b, A)).
inline double chamfer_l1(std::span<const Vec3> a, std::span<const Vec3> b) {
  require(!a.empty() && !b.empty(), "chamfer_l1: empty point set");
  return 0.5 * (mean_nearest_distance(a, b) + mean_nearest_distance(b, a));
}

}  // namespace skf
