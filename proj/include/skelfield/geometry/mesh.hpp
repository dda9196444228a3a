// Triangle meshes, canonical normalization and Wavefront OBJ IO.
#pragma once

#include "skelfield/core.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace skf {

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  bool empty() const { return vertices.empty() || triangles.empty(); }

  std::pair<Vec3, Vec3> bounds() const {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& v : vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    return {lo, hi};
  }

  double triangle_area(std::size_t t) const {
    const auto& f = triangles[t];
    return 0.5 * (vertices[f[1]] - vertices[f[0]])
                     .cross(vertices[f[2]] - vertices[f[0]])
                     .norm();
  }

  /// Unit normal following the triangle's winding.
  Vec3 triangle_normal(std::size_t t) const {
    const auto& f = triangles[t];
    return (vertices[f[1]] - vertices[f[0]])
        .cross(vertices[f[2]] - vertices[f[0]])
        .normalized();
  }

  /// Signed enclosed volume; positive when triangles wind counter-clockwise
  /// seen from outside.
  double signed_volume() const {
    double vol = 0.0;
    for (const auto& f : triangles)
      vol += vertices[f[0]].dot(vertices[f[1]].cross(vertices[f[2]]));
    return vol / 6.0;
  }

  /// Throws ValidationError on out-of-range indices or degenerate triangles.
  void validate() const {
    const int n = static_cast<int>(vertices.size());
    for (std::size_t t = 0; t < triangles.size(); ++t) {
      for (int i : triangles[t])
        require(i >= 0 && i < n, "triangle " + std::to_string(t) +
                                     " references vertex out of range");
      require(triangle_area(t) > 1e-12,
              "triangle " + std::to_string(t) + " is degenerate");
    }
  }
};

/// Maps p to scale * (p + translation).
struct Similarity {
  double scale = 1.0;
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return scale * (p + translation); }
  Vec3 invert(const Vec3& q) const { return q / scale - translation; }
  bool is_identity(double tol = 1e-12) const {
    return std::abs(scale - 1.0) <= tol && translation.norm() <= tol;
  }
};

/// Centers the bounding box at the origin and scales its longest side to 1.
inline std::pair<Mesh, Similarity> normalize_mesh(const Mesh& mesh) {
  if (mesh.vertices.empty()) throw ValidationError("empty geometry");
  const auto [lo, hi] = mesh.bounds();
  const double extent = (hi - lo).maxCoeff();
  require(extent > 0.0, "empty geometry: zero extent");
  Similarity xf;
  xf.translation = -0.5 * (lo + hi);
  xf.scale = 1.0 / extent;
  Mesh out = mesh;
  for (auto& v : out.vertices) v = xf.apply(v);
  return {std::move(out), xf};
}

inline Mesh read_obj(std::istream& in) {
  Mesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      require(static_cast<bool>(ls >> v.x() >> v.y() >> v.z()),
              "obj line " + std::to_string(lineno) + ": bad vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        // Accept v, v/vt, v//vn, v/vt/vn; only the position index matters.
        const int i = std::stoi(tok.substr(0, tok.find('/')));
        idx.push_back(i > 0 ? i - 1
                            : static_cast<int>(mesh.vertices.size()) + i);
      }
      require(idx.size() >= 3,
              "obj line " + std::to_string(lineno) + ": face needs 3 indices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k)
        mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  mesh.validate();
  return mesh;
}

inline Mesh read_obj(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open " + path);
  return read_obj(in);
}

inline void write_obj(std::ostream& out, const Mesh& mesh) {
  out.precision(17);
  for (const auto& v : mesh.vertices)
    out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& f : mesh.triangles)
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

inline void write_obj(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  require(out.good(), "cannot write " + path);
  write_obj(out, mesh);
}

/// Vertex one-ring adjacency (sorted, unique).
inline std::vector<std::vector<int>> vertex_neighbors(const Mesh& mesh) {
  std::vector<std::vector<int>> nb(mesh.vertices.size());
  for (const auto& f : mesh.triangles)
    for (int k = 0; k < 3; ++k) {
      nb[f[k]].push_back(f[(k + 1) % 3]);
      nb[f[k]].push_back(f[(k + 2) % 3]);
    }
  for (auto& n : nb) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return nb;
}

}  // namespace skf
