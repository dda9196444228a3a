// Inside/outside classification by axis-aligned ray-crossing parity.
//
// Each axis ray is reduced to a 2D point-in-triangle test on the projection
// perpendicular to the ray. Points landing exactly on a projected edge are
// resolved with a top-left fill rule, so a ray through a shared edge or
// vertex of a closed surface is counted exactly once.
#pragma once

#include "skelfield/geometry/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

namespace skf {

namespace detail {

inline double orient2d(double ax, double ay, double bx, double by, double qx,
                       double qy) {
  return (bx - ax) * (qy - ay) - (by - ay) * (qx - ax);
}

// Edge a->b of a counter-clockwise triangle owns the points lying on it iff
// it is a "top" or "left" edge. Reversing the edge flips the answer.
inline bool owns_edge(double ax, double ay, double bx, double by) {
  const double dy = by - ay;
  const double dx = bx - ax;
  return dy < 0.0 || (dy == 0.0 && dx > 0.0);
}

}  // namespace detail

/// Coordinate along `axis` where the line through (q_b, q_c) pierces the
/// triangle, or nullopt. (b, c) are the two remaining axes in cyclic order.
inline std::optional<double> axis_line_hit(const Vec3& A, const Vec3& B,
                                           const Vec3& C, int axis, double qb,
                                           double qc) {
  const int b = (axis + 1) % 3;
  const int c = (axis + 2) % 3;
  std::array<const Vec3*, 3> v{&A, &B, &C};
  double area = detail::orient2d(A[b], A[c], B[b], B[c], C[b], C[c]);
  if (area == 0.0) return std::nullopt;
  if (area < 0.0) {
    std::swap(v[1], v[2]);
    area = -area;
  }
  std::array<double, 3> w{};
  for (int k = 0; k < 3; ++k) {
    const Vec3& p0 = *v[(k + 1) % 3];
    const Vec3& p1 = *v[(k + 2) % 3];
    const double e = detail::orient2d(p0[b], p0[c], p1[b], p1[c], qb, qc);
    if (e < 0.0) return std::nullopt;
    if (e == 0.0 && !detail::owns_edge(p0[b], p0[c], p1[b], p1[c]))
      return std::nullopt;
    w[k] = e;  // barycentric weight of vertex k (opposite edge)
  }
  return (w[0] * (*v[0])[axis] + w[1] * (*v[1])[axis] + w[2] * (*v[2])[axis]) /
         area;
}

/// Ray-parity inside test with a per-axis uniform bucket grid over the
/// projected triangle bounding boxes.
class InsideTester {
 public:
  explicit InsideTester(const Mesh& mesh) : mesh_(&mesh) {
    const auto [lo, hi] = mesh.bounds();
    lo_ = lo;
    hi_ = hi;
    const auto nt = static_cast<double>(mesh.triangles.size());
    cells_ = std::clamp(static_cast<int>(std::sqrt(nt)), 1, 64);
    for (int axis = 0; axis < 3; ++axis) build_axis(axis);
  }

  /// All crossing coordinates of the axis-parallel line through (qb, qc),
  /// sorted ascending.
  std::vector<double> line_crossings(int axis, double qb, double qc) const {
    std::vector<double> hits;
    const int b = (axis + 1) % 3;
    const int c = (axis + 2) % 3;
    if (qb < lo_[b] || qb > hi_[b] || qc < lo_[c] || qc > hi_[c]) return hits;
    const auto& bucket = buckets_[axis][cell(axis, qb, qc)];
    for (int t : bucket) {
      const auto& f = mesh_->triangles[t];
      if (auto h = axis_line_hit(mesh_->vertices[f[0]], mesh_->vertices[f[1]],
                                 mesh_->vertices[f[2]], axis, qb, qc))
        hits.push_back(*h);
    }
    std::sort(hits.begin(), hits.end());
    return hits;
  }

  /// Parity of crossings of the ray from p toward +axis.
  bool ray_parity(const Vec3& p, int axis) const {
    const int b = (axis + 1) % 3;
    const int c = (axis + 2) % 3;
    const auto hits = line_crossings(axis, p[b], p[c]);
    const auto above = hits.end() - std::upper_bound(hits.begin(), hits.end(),
                                                     p[axis]);
    return (above % 2) == 1;
  }

  /// Majority vote over the +x, +y and +z rays.
  bool inside(const Vec3& p) const {
    int votes = 0;
    for (int axis = 0; axis < 3; ++axis) votes += ray_parity(p, axis) ? 1 : 0;
    return votes >= 2;
  }

  const Mesh& mesh() const { return *mesh_; }

 private:
  int clamp_cell(double t) const {
    return std::clamp(static_cast<int>(std::floor(t * cells_)), 0, cells_ - 1);
  }

  std::size_t cell(int axis, double qb, double qc) const {
    const int b = (axis + 1) % 3;
    const int c = (axis + 2) % 3;
    const int i = clamp_cell(unit(b, qb));
    const int j = clamp_cell(unit(c, qc));
    return static_cast<std::size_t>(i) * cells_ + j;
  }

  double unit(int d, double x) const {
    const double ext = hi_[d] - lo_[d];
    return ext > 0.0 ? (x - lo_[d]) / ext : 0.0;
  }

  void build_axis(int axis) {
    const int b = (axis + 1) % 3;
    const int c = (axis + 2) % 3;
    auto& buckets = buckets_[axis];
    buckets.assign(static_cast<std::size_t>(cells_) * cells_, {});
    for (std::size_t t = 0; t < mesh_->triangles.size(); ++t) {
      const auto& f = mesh_->triangles[t];
      double bmin = 1e300, bmax = -1e300, cmin = 1e300, cmax = -1e300;
      for (int k = 0; k < 3; ++k) {
        const Vec3& v = mesh_->vertices[f[k]];
        bmin = std::min(bmin, v[b]);
        bmax = std::max(bmax, v[b]);
        cmin = std::min(cmin, v[c]);
        cmax = std::max(cmax, v[c]);
      }
      for (int i = clamp_cell(unit(b, bmin)); i <= clamp_cell(unit(b, bmax)); ++i)
        for (int j = clamp_cell(unit(c, cmin)); j <= clamp_cell(unit(c, cmax));
             ++j)
          buckets[static_cast<std::size_t>(i) * cells_ + j].push_back(
              static_cast<int>(t));
    }
  }

  const Mesh* mesh_;
  Vec3 lo_, hi_;
  int cells_ = 1;
  std::array<std::vector<std::vector<int>>, 3> buckets_;
};

inline bool is_inside(const Mesh& mesh, const Vec3& p) {
  return InsideTester(mesh).inside(p);
}

}  // namespace skf
