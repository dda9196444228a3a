// Joint extraction by probability-modulated mean-shift in embedding space.
#pragma once

#include "skelfield/fields.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace skf {

struct MeanShiftConfig {
  double bandwidth = 0.5;         // RBF kernel scale h in embedding space
  int max_iters = 100;
  double tolerance = 1e-6;        // stop once |m(v)| falls below this
  double merge_radius = 0.08;     // single-linkage radius in model space (2 sigma)
  double neighbor_radius = 0.1;   // Euclidean radius of the neighborhood N(v)
  double seed_threshold = 0.5;    // seeds are sample points with P_J above this
  std::size_t sample_count = 4096;

  void validate() const {
    require(bandwidth > 0.0, "mean-shift: bandwidth must be positive");
    require(max_iters > 0, "mean-shift: max_iters must be positive");
    require(tolerance > 0.0, "mean-shift: tolerance must be positive");
    require(merge_radius > 0.0, "mean-shift: merge radius must be positive");
    require(neighbor_radius > 0.0, "mean-shift: neighbor radius must be positive");
    require(seed_threshold > 0.0 && seed_threshold < 1.0,
            "mean-shift: seed threshold must be in (0, 1)");
    require(sample_count > 0, "mean-shift: sample count must be positive");
  }
};

/// Points u in N(v) with their joint probability and embedding.
struct NeighborView {
  std::span<const Vec3> points;
  std::span<const double> joint;
  std::span<const Eigen::VectorXd> embedding;
};

struct ShiftResult {
  Vec3 displacement = Vec3::Zero();
  bool degenerate = false;  // total weight below 1e-12
};

inline double rbf(double d2, double h) { return std::exp(-d2 / (2.0 * h * h)); }

/// m(v) = sum_u P_J(u) k(|x(u) - x(v)|) u / sum_u P_J(u) k(|x(u) - x(v)|) - v.
inline ShiftResult mean_shift_step(const Vec3& v, const Eigen::VectorXd& xv,
                                   const NeighborView& nb, double bandwidth) {
  Vec3 acc = Vec3::Zero();
  double total = 0.0;
  for (std::size_t i = 0; i < nb.points.size(); ++i) {
    const double w = nb.joint[i] * rbf((nb.embedding[i] - xv).squaredNorm(), bandwidth);
    acc += w * nb.points[i];
    total += w;
  }
  if (total < 1e-12) return {Vec3::Zero(), true};
  return {acc / total - v, false};
}

struct JointExtraction {
  std::vector<Vec3> joints;
  std::vector<Vec3> seeds;
  std::vector<Vec3> converged;
  std::vector<int> cluster;  // cluster index of each seed
  std::size_t degenerate = 0;
};

namespace detail {

inline bool lex_less(const Vec3& a, const Vec3& b) {
  return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
}

/// Connected components of the "closer than r" graph; labels follow the order
/// of first appearance.
inline std::vector<int> single_linkage(std::span<const Vec3> pts, double r) {
  const auto n = pts.size();
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if ((pts[i] - pts[j]).norm() < r) {
        const int a = find(static_cast<int>(i)), b = find(static_cast<int>(j));
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<int> label(n, -1), remap(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int root = find(static_cast<int>(i));
    if (remap[root] < 0) remap[root] = next++;
    label[i] = remap[root];
  }
  return label;
}

}  // namespace detail

/// Shifts every seed (sample point with P_J above threshold) to convergence,
/// merges converged points within the merge radius and returns the P_J
/// weighted mean of each group. The seed embedding x(v) stays fixed along the
/// trajectory. Duplicate seeds are dropped and seeds are processed in
/// lexicographic order, so the result does not depend on sample order.
inline JointExtraction extract_joints(std::span<const Vec3> samples, const FieldValues& fields,
                                      const MeanShiftConfig& cfg) {
  cfg.validate();
  require(fields.size() == samples.size() && fields.embedding.size() == samples.size(),
          "extract_joints: fields do not match the sample");
  std::vector<std::size_t> seed_idx;
  for (std::size_t i = 0; i < samples.size(); ++i)
    if (fields.joint[i] > cfg.seed_threshold) seed_idx.push_back(i);
  if (seed_idx.empty()) throw ValidationError("no joint evidence");
  std::sort(seed_idx.begin(), seed_idx.end(), [&](std::size_t a, std::size_t b) {
    if (samples[a] != samples[b]) return detail::lex_less(samples[a], samples[b]);
    return a < b;
  });
  seed_idx.erase(std::unique(seed_idx.begin(), seed_idx.end(),
                             [&](std::size_t a, std::size_t b) { return samples[a] == samples[b]; }),
                 seed_idx.end());

  JointExtraction out;
  std::vector<Vec3> nb_pts;
  std::vector<double> nb_joint;
  std::vector<Eigen::VectorXd> nb_emb;
  const double r2 = cfg.neighbor_radius * cfg.neighbor_radius;
  std::vector<double> seed_weight;
  for (auto si : seed_idx) {
    Vec3 v = samples[si];
    const auto& xv = fields.embedding[si];
    out.seeds.push_back(v);
    seed_weight.push_back(fields.joint[si]);
    for (int it = 0; it < cfg.max_iters; ++it) {
      nb_pts.clear();
      nb_joint.clear();
      nb_emb.clear();
      for (std::size_t i = 0; i < samples.size(); ++i)
        if ((samples[i] - v).squaredNorm() <= r2) {
          nb_pts.push_back(samples[i]);
          nb_joint.push_back(fields.joint[i]);
          nb_emb.push_back(fields.embedding[i]);
        }
      const auto step = mean_shift_step(v, xv, {nb_pts, nb_joint, nb_emb}, cfg.bandwidth);
      if (step.degenerate) {
        ++out.degenerate;
        break;
      }
      v += step.displacement;
      if (step.displacement.norm() < cfg.tolerance) break;
    }
    out.converged.push_back(v);
  }

  out.cluster = detail::single_linkage(out.converged, cfg.merge_radius);
  const int k = *std::max_element(out.cluster.begin(), out.cluster.end()) + 1;
  std::vector<Vec3> sum(k, Vec3::Zero());
  std::vector<double> wsum(k, 0.0);
  for (std::size_t i = 0; i < out.converged.size(); ++i) {
    sum[out.cluster[i]] += seed_weight[i] * out.converged[i];
    wsum[out.cluster[i]] += seed_weight[i];
  }
  for (int c = 0; c < k; ++c) out.joints.push_back(sum[c] / wsum[c]);
  return out;
}

/// Argmax of the root probability over the joints; ties go to the lowest index.
inline int select_root(std::span<const Vec3> joints, const FieldSource& fields) {
  require(!joints.empty(), "select_root: no joints");
  const auto vals = fields.evaluate(joints);
  int best = 0;
  for (std::size_t j = 1; j < vals.root.size(); ++j)
    if (vals.root[j] > vals.root[best]) best = static_cast<int>(j);
  return best;
}

}  // namespace skf
