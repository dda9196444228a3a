// Kinematic tree construction: bone-probability edge weights over the complete
// joint graph and a Prim spanning tree grown from the root.
#pragma once

#include "skelfield/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace skf {

struct EdgeWeightConfig {
  int samples = 16;  // M
  double epsilon = 1e-4;

  void validate() const {
    require(samples >= 2, "edge weight: need at least 2 samples");
    require(epsilon > 0.0, "edge weight: epsilon must be positive");
  }
};

/// M evenly spaced points from a to b, both endpoints included.
inline std::vector<Vec3> edge_samples(const Vec3& a, const Vec3& b, int m) {
  std::vector<Vec3> out;
  out.reserve(m);
  for (int i = 0; i < m; ++i) out.push_back(a + (static_cast<double>(i) / (m - 1)) * (b - a));
  return out;
}

/// -log(eps + mean of the bone probabilities sampled along the edge).
inline double edge_weight_from_samples(std::span<const double> bone_prob, double epsilon) {
  double mean = 0.0;
  for (double p : bone_prob) mean += p;
  mean /= static_cast<double>(bone_prob.size());
  return -std::log(epsilon + mean);
}

inline double edge_weight(const Vec3& a, const Vec3& b, const FieldSource& fields,
                          const EdgeWeightConfig& cfg = {}) {
  cfg.validate();
  const auto pts = edge_samples(a, b, cfg.samples);
  return edge_weight_from_samples(fields.evaluate(pts).bone, cfg.epsilon);
}

/// Complete undirected graph over the detected joints.
struct WeightedGraph {
  std::vector<Vec3> nodes;
  Eigen::MatrixXd weight;  // symmetric, diagonal unused

  std::size_t size() const { return nodes.size(); }
};

inline WeightedGraph build_graph(std::span<const Vec3> joints, const FieldSource& fields,
                                 const EdgeWeightConfig& cfg = {}) {
  cfg.validate();
  const auto n = static_cast<Eigen::Index>(joints.size());
  WeightedGraph g;
  g.nodes.assign(joints.begin(), joints.end());
  g.weight = Eigen::MatrixXd::Zero(n, n);
  std::vector<Vec3> pts;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const auto s = edge_samples(joints[i], joints[j], cfg.samples);
      pts.insert(pts.end(), s.begin(), s.end());
    }
  const auto bone = fields.evaluate(pts).bone;
  std::size_t off = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double w = edge_weight_from_samples(
          std::span<const double>(bone).subspan(off, static_cast<std::size_t>(cfg.samples)),
          cfg.epsilon);
      g.weight(i, j) = g.weight(j, i) = w;
      off += static_cast<std::size_t>(cfg.samples);
    }
  return g;
}

/// Prim's minimum spanning tree grown from `root`, edges oriented away from
/// it. Among equal weights the edge with the smaller (min index, max index)
/// pair wins.
inline Skeleton kinematic_tree(const WeightedGraph& g, int root) {
  const auto n = static_cast<int>(g.size());
  require(n >= 1, "kinematic_tree: empty graph");
  require(root >= 0 && root < n, "kinematic_tree: root out of range");
  require(g.weight.rows() == n && g.weight.cols() == n, "kinematic_tree: bad weight matrix");
  require(g.weight.allFinite(), "kinematic_tree: non-finite edge weight");
  Skeleton s;
  s.root = root;
  s.joints.resize(n);
  for (int i = 0; i < n; ++i) s.joints[i].pos = g.nodes[i];
  std::vector<char> in_tree(n, 0);
  in_tree[root] = 1;
  for (int added = 1; added < n; ++added) {
    std::tuple<double, int, int> best{std::numeric_limits<double>::infinity(), n, n};
    int best_u = -1, best_v = -1;
    for (int u = 0; u < n; ++u) {
      if (!in_tree[u]) continue;
      for (int v = 0; v < n; ++v) {
        if (in_tree[v]) continue;
        const std::tuple<double, int, int> key{g.weight(u, v), std::min(u, v), std::max(u, v)};
        if (key < best) {
          best = key;
          best_u = u;
          best_v = v;
        }
      }
    }
    in_tree[best_v] = 1;
    s.joints[best_v].parent = best_u;
  }
  return s;
}

/// Sum of the edge weights in ascending order, so equal edge sets give
/// bitwise equal totals.
inline double tree_weight(const WeightedGraph& g, const Skeleton& s) {
  std::vector<double> w;
  for (const auto& b : s.bones()) w.push_back(g.weight(b.child, b.parent));
  std::sort(w.begin(), w.end());
  double total = 0.0;
  for (double x : w) total += x;
  return total;
}

namespace detail {

inline std::string ahu_code(const std::vector<std::vector<int>>& children, int node) {
  std::vector<std::string> codes;
  for (int c : children[node]) codes.push_back(ahu_code(children, c));
  std::sort(codes.begin(), codes.end());
  std::string out = "(";
  for (const auto& c : codes) out += c;
  return out + ")";
}

}  // namespace detail

/// Canonical string of the rooted tree; equal strings iff isomorphic.
inline std::string rooted_tree_code(const Skeleton& s) {
  require(!s.empty(), "rooted_tree_code: empty skeleton");
  return detail::ahu_code(s.children(), s.root);
}

inline bool rooted_isomorphic(const Skeleton& a, const Skeleton& b) {
  return a.size() == b.size() && rooted_tree_code(a) == rooted_tree_code(b);
}

}  // namespace skf
