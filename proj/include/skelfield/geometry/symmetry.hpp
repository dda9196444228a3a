// Canonical-plane reflective symmetry detection.
#pragma once

#include "skelfield/geometry/distance.hpp"
#include "skelfield/geometry/mesh.hpp"

#include <array>
#include <optional>
#include <vector>

namespace skf {

/// Mirror plane with normal along `axis`, passing through `offset`.
struct SymmetryPlane {
  int axis = 0;
  double offset = 0.0;
  double chamfer = 0.0;

  Vec3 reflect(const Vec3& p) const {
    Vec3 q = p;
    q[axis] = 2.0 * offset - p[axis];
    return q;
  }
};

inline std::vector<Vec3> reflect_points(const std::vector<Vec3>& pts, int axis) {
  std::vector<Vec3> out = pts;
  for (auto& p : out) p[axis] = -p[axis];
  return out;
}

/// Residuals of the x, y and z reflections (Chamfer-L1 between the mirrored
/// and original vertex sets).
inline std::array<double, 3> symmetry_residuals(const Mesh& mesh) {
  std::array<double, 3> r{};
  for (int axis = 0; axis < 3; ++axis)
    r[axis] = chamfer_l1(reflect_points(mesh.vertices, axis), mesh.vertices);
  return r;
}

/// Best canonical plane if its residual is below `threshold`. Ties go to the
/// lower axis.
inline std::optional<SymmetryPlane> detect_symmetry(const Mesh& mesh,
                                                    double threshold = 0.02) {
  require(!mesh.vertices.empty(), "detect_symmetry: empty geometry");
  const auto r = symmetry_residuals(mesh);
  int best = 0;
  for (int axis = 1; axis < 3; ++axis)
    if (r[axis] < r[best]) best = axis;
  if (!(r[best] < threshold)) return std::nullopt;
  return SymmetryPlane{best, 0.0, r[best]};
}

}  // namespace skf
