// Part-based skinning weights: one control joint per part, smoothed across
// part boundaries.
#pragma once

#include "skelfield/fields.hpp"
#include "skelfield/geometry/mesh.hpp"

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

namespace skf {

/// Sparse per-vertex weights, sorted by joint index.
using WeightRow = std::vector<std::pair<int, double>>;

struct RigModel {
  Mesh mesh;
  Skeleton skeleton;
  std::vector<WeightRow> weights;

  /// Weights nonnegative, summing to 1 within 1e-6, referencing existing joints.
  void validate() const {
    skeleton.validate();
    require(weights.size() == mesh.vertices.size(), "rig: one weight row per vertex required");
    const int n = static_cast<int>(skeleton.size());
    for (std::size_t v = 0; v < weights.size(); ++v) {
      double sum = 0.0;
      for (const auto& [j, w] : weights[v]) {
        require(j >= 0 && j < n, "rig: vertex " + std::to_string(v) + " references missing joint");
        require(w >= 0.0 && std::isfinite(w), "rig: negative or non-finite weight");
        sum += w;
      }
      require(std::abs(sum - 1.0) <= 1e-6,
              "rig: weights of vertex " + std::to_string(v) + " do not sum to 1");
    }
  }
};

struct SkinningConfig {
  double sigma = 0.04;        // a joint is inside a part when closer than 2 sigma
  int smoothing_rounds = 10;
  double band = 0.05;         // smoothing band around inter-part edges
  double tie_tolerance = 1e-6;

  void validate() const {
    require(sigma > 0.0, "skinning: sigma must be positive");
    require(smoothing_rounds >= 0, "skinning: smoothing rounds must be >= 0");
    require(band >= 0.0, "skinning: band must be >= 0");
    require(tie_tolerance >= 0.0, "skinning: tie tolerance must be >= 0");
  }
};

/// Nearest-joint labels of the mesh vertices.
inline std::vector<int> nearest_joint_parts(const Mesh& mesh, const Skeleton& skel) {
  std::vector<int> parts;
  parts.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) parts.push_back(instance_label(skel, v));
  return parts;
}

/// Splits every part that has two or more joints within 2 sigma of its vertex
/// set, relabeling its vertices by the nearest of those joints. Labels of the
/// result are renumbered 0..P-1 in order of first appearance.
inline std::vector<int> split_parts(const Mesh& mesh, const Skeleton& skel,
                                    const std::vector<int>& parts, double sigma) {
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t v = 0; v < parts.size(); ++v) members[parts[v]].push_back(v);
  std::map<std::pair<int, int>, int> ids;
  std::vector<int> out(parts.size());
  auto id_of = [&](int part, int sub) {
    auto [it, inserted] = ids.try_emplace({part, sub}, static_cast<int>(ids.size()));
    return it->second;
  };
  for (const auto& [part, verts] : members) {
    std::vector<int> inside;
    for (std::size_t j = 0; j < skel.size(); ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (auto v : verts) best = std::min(best, (mesh.vertices[v] - skel.joints[j].pos).norm());
      if (best < 2.0 * sigma) inside.push_back(static_cast<int>(j));
    }
    for (auto v : verts) {
      int sub = -1;
      if (inside.size() >= 2) {
        double best = std::numeric_limits<double>::infinity();
        for (int j : inside) {
          const double d = (mesh.vertices[v] - skel.joints[j].pos).squaredNorm();
          if (d < best) {
            best = d;
            sub = j;
          }
        }
      }
      out[v] = sub;
      (void)id_of(part, sub);
    }
    for (auto v : verts) out[v] = id_of(part, out[v]);
  }
  // Renumber by first appearance so labels do not depend on the map order.
  std::map<int, int> remap;
  for (auto& l : out) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    l = it->second;
  }
  return out;
}

/// Joint closest to `center`; joints within `tol` of the best distance are
/// tied and the tie goes to the shallowest one (the parent), then the lowest
/// index.
inline int control_joint(const Skeleton& skel, const Vec3& center, double tol = 1e-6) {
  require(!skel.empty(), "control_joint: empty skeleton");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& j : skel.joints) best = std::min(best, (j.pos - center).norm());
  int pick = -1;
  for (std::size_t j = 0; j < skel.size(); ++j) {
    if ((skel.joints[j].pos - center).norm() > best + tol) continue;
    if (pick < 0 || skel.depth(static_cast<int>(j)) < skel.depth(pick)) pick = static_cast<int>(j);
  }
  return pick;
}

/// Vertices closer than `band` to an edge whose endpoints lie in different parts.
inline std::vector<char> boundary_band(const Mesh& mesh, const std::vector<int>& parts,
                                       double band) {
  std::vector<std::pair<int, int>> cut;
  for (const auto& t : mesh.triangles)
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      if (parts[a] != parts[b]) cut.emplace_back(std::min(a, b), std::max(a, b));
    }
  std::sort(cut.begin(), cut.end());
  cut.erase(std::unique(cut.begin(), cut.end()), cut.end());
  std::vector<char> in(mesh.vertices.size(), 0);
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    for (const auto& [a, b] : cut)
      if (point_to_segment(mesh.vertices[v], mesh.vertices[a], mesh.vertices[b]) < band) {
        in[v] = 1;
        break;
      }
  return in;
}

/// Hard binding of every part to its control joint followed by Jacobi rounds
/// of one-ring averaging inside the boundary band, each row renormalized.
inline RigModel compute_skinning(const Mesh& mesh, const Skeleton& skel,
                                 const std::vector<int>& parts, const SkinningConfig& cfg = {}) {
  cfg.validate();
  if (skel.empty()) throw ValidationError("compute_skinning: skeleton has no joints");
  skel.validate();
  require(parts.size() == mesh.vertices.size(), "compute_skinning: one part label per vertex required");
  for (std::size_t v = 0; v < parts.size(); ++v)
    if (parts[v] < 0) throw ValidationError("compute_skinning: vertex " + std::to_string(v) + " is unlabeled");

  const auto split = split_parts(mesh, skel, parts, cfg.sigma);
  const int num_parts = *std::max_element(split.begin(), split.end()) + 1;
  std::vector<Vec3> center(num_parts, Vec3::Zero());
  std::vector<int> count(num_parts, 0);
  for (std::size_t v = 0; v < split.size(); ++v) {
    center[split[v]] += mesh.vertices[v];
    ++count[split[v]];
  }
  std::vector<int> control(num_parts);
  for (int p = 0; p < num_parts; ++p)
    control[p] = control_joint(skel, center[p] / count[p], cfg.tie_tolerance);

  const auto nv = static_cast<Eigen::Index>(mesh.vertices.size());
  const auto nj = static_cast<Eigen::Index>(skel.size());
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(nv, nj);
  for (Eigen::Index v = 0; v < nv; ++v) w(v, control[split[v]]) = 1.0;

  const auto band = boundary_band(mesh, split, cfg.band);
  const auto ring = vertex_neighbors(mesh);
  for (int round = 0; round < cfg.smoothing_rounds; ++round) {
    Eigen::MatrixXd next = w;
    for (Eigen::Index v = 0; v < nv; ++v) {
      if (!band[v] || ring[v].empty()) continue;
      Eigen::RowVectorXd avg = Eigen::RowVectorXd::Zero(nj);
      for (int u : ring[v]) avg += w.row(u);
      next.row(v) = avg / avg.sum();
    }
    w = std::move(next);
  }

  RigModel rig{mesh, skel, {}};
  rig.weights.resize(static_cast<std::size_t>(nv));
  for (Eigen::Index v = 0; v < nv; ++v)
    for (Eigen::Index j = 0; j < nj; ++j)
      if (w(v, j) > 0.0) rig.weights[v].emplace_back(static_cast<int>(j), w(v, j));
  return rig;
}

inline RigModel compute_skinning(const Mesh& mesh, const Skeleton& skel,
                                 const SkinningConfig& cfg = {}) {
  if (skel.empty()) throw ValidationError("compute_skinning: skeleton has no joints");
  return compute_skinning(mesh, skel, nearest_joint_parts(mesh, skel), cfg);
}

}  // namespace skf
