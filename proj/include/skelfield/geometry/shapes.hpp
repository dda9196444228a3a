// Procedural watertight meshes: box unions, cylinders, spheres.
#pragma once

#include "skelfield/geometry/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <vector>

namespace skf {

struct Box {
  Vec3 lo;
  Vec3 hi;

  static Box centered(const Vec3& center, const Vec3& size) {
    return {center - 0.5 * size, center + 0.5 * size};
  }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
};

/// Boundary of the union of axis-aligned boxes. All box faces are cut on the
/// common rectilinear grid of box coordinates, so the result is watertight
/// with no T-junctions. Faces wind counter-clockwise seen from outside.
inline Mesh box_union_mesh(std::span<const Box> boxes) {
  require(!boxes.empty(), "box_union_mesh: no boxes");
  std::array<std::vector<double>, 3> coord;
  for (const auto& b : boxes)
    for (int d = 0; d < 3; ++d) {
      coord[d].push_back(b.lo[d]);
      coord[d].push_back(b.hi[d]);
    }
  for (auto& c : coord) {
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
  }
  const std::array<int, 3> ncell{static_cast<int>(coord[0].size()) - 1,
                                 static_cast<int>(coord[1].size()) - 1,
                                 static_cast<int>(coord[2].size()) - 1};
  auto occupied = [&](std::array<int, 3> c) {
    for (int d = 0; d < 3; ++d)
      if (c[d] < 0 || c[d] >= ncell[d]) return false;
    const Vec3 mid(0.5 * (coord[0][c[0]] + coord[0][c[0] + 1]),
                   0.5 * (coord[1][c[1]] + coord[1][c[1] + 1]),
                   0.5 * (coord[2][c[2]] + coord[2][c[2] + 1]));
    return std::any_of(boxes.begin(), boxes.end(),
                       [&](const Box& b) { return b.contains(mid); });
  };

  Mesh mesh;
  std::map<std::array<int, 3>, int> node_id;
  auto vertex = [&](std::array<int, 3> n) {
    auto [it, fresh] = node_id.try_emplace(n, static_cast<int>(mesh.vertices.size()));
    if (fresh)
      mesh.vertices.emplace_back(coord[0][n[0]], coord[1][n[1]], coord[2][n[2]]);
    return it->second;
  };

  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3;
    const int c = (a + 2) % 3;
    for (int i = 0; i <= ncell[a]; ++i)
      for (int j = 0; j < ncell[b]; ++j)
        for (int k = 0; k < ncell[c]; ++k) {
          std::array<int, 3> below{}, above{};
          below[a] = i - 1;
          above[a] = i;
          below[b] = above[b] = j;
          below[c] = above[c] = k;
          const bool lo_in = occupied(below);
          const bool hi_in = occupied(above);
          if (lo_in == hi_in) continue;
          std::array<int, 4> quad{};
          const int jj[4] = {j, j + 1, j + 1, j};
          const int kk[4] = {k, k, k + 1, k + 1};
          for (int q = 0; q < 4; ++q) {
            std::array<int, 3> n{};
            n[a] = i;
            n[b] = jj[q];
            n[c] = kk[q];
            quad[q] = vertex(n);
          }
          // The (b, c) corner order has normal +a; flip when the solid side
          // is above the plane.
          if (hi_in) std::swap(quad[1], quad[3]);
          mesh.triangles.push_back({quad[0], quad[1], quad[2]});
          mesh.triangles.push_back({quad[0], quad[2], quad[3]});
        }
  }
  return mesh;
}

inline Mesh box_mesh(const Vec3& lo, const Vec3& hi) {
  const Box b{lo, hi};
  return box_union_mesh(std::span<const Box>(&b, 1));
}

/// Closed cylinder from `a` to `b` with `rings` + 1 vertex rings along its
/// length and capped ends.
inline Mesh cylinder_mesh(const Vec3& a, const Vec3& b, double radius,
                          int segments = 24, int rings = 8) {
  require(segments >= 3 && rings >= 1 && radius > 0.0, "cylinder_mesh: bad size");
  const Vec3 axis = (b - a).normalized();
  const Vec3 helper = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 u = axis.cross(helper).normalized();
  const Vec3 v = axis.cross(u);
  Mesh m;
  for (int r = 0; r <= rings; ++r) {
    const Vec3 c = a + (b - a) * (static_cast<double>(r) / rings);
    for (int s = 0; s < segments; ++s) {
      const double t = 2.0 * std::numbers::pi * s / segments;
      m.vertices.push_back(c + radius * (std::cos(t) * u + std::sin(t) * v));
    }
  }
  auto id = [&](int r, int s) { return r * segments + (s % segments); };
  for (int r = 0; r < rings; ++r)
    for (int s = 0; s < segments; ++s) {
      m.triangles.push_back({id(r, s), id(r, s + 1), id(r + 1, s + 1)});
      m.triangles.push_back({id(r, s), id(r + 1, s + 1), id(r + 1, s)});
    }
  const int ca = static_cast<int>(m.vertices.size());
  m.vertices.push_back(a);
  const int cb = ca + 1;
  m.vertices.push_back(b);
  for (int s = 0; s < segments; ++s) {
    m.triangles.push_back({ca, id(0, s + 1), id(0, s)});
    m.triangles.push_back({cb, id(rings, s), id(rings, s + 1)});
  }
  return m;
}

/// UV sphere.
inline Mesh sphere_mesh(const Vec3& center, double radius, int stacks = 24,
                        int slices = 48) {
  require(stacks >= 2 && slices >= 3 && radius > 0.0, "sphere_mesh: bad size");
  Mesh m;
  m.vertices.push_back(center + radius * Vec3::UnitZ());
  for (int i = 1; i < stacks; ++i) {
    const double phi = std::numbers::pi * i / stacks;
    for (int j = 0; j < slices; ++j) {
      const double th = 2.0 * std::numbers::pi * j / slices;
      m.vertices.push_back(center + radius * Vec3(std::sin(phi) * std::cos(th),
                                                  std::sin(phi) * std::sin(th),
                                                  std::cos(phi)));
    }
  }
  m.vertices.push_back(center - radius * Vec3::UnitZ());
  const int south = static_cast<int>(m.vertices.size()) - 1;
  auto id = [&](int ring, int j) { return 1 + ring * slices + (j % slices); };
  for (int j = 0; j < slices; ++j) m.triangles.push_back({0, id(0, j), id(0, j + 1)});
  for (int r = 0; r + 1 < stacks - 1; ++r)
    for (int j = 0; j < slices; ++j) {
      m.triangles.push_back({id(r, j), id(r + 1, j), id(r + 1, j + 1)});
      m.triangles.push_back({id(r, j), id(r + 1, j + 1), id(r, j + 1)});
    }
  for (int j = 0; j < slices; ++j)
    m.triangles.push_back({south, id(stacks - 2, j + 1), id(stacks - 2, j)});
  return m;
}

}  // namespace skf
