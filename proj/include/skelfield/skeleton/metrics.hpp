// Skeleton Chamfer metrics: joint-to-joint, joint-to-bone and bone-to-bone.
#pragma once

#include "skelfield/fields.hpp"

#include <nlohmann/json.hpp>

#include <vector>

namespace skf {

/// `per_bone` evenly spaced points on every bone, endpoints included.
inline std::vector<Vec3> bone_samples(const Skeleton& s, int per_bone = 32) {
  require(per_bone >= 2, "bone_samples: need at least 2 samples per bone");
  const auto bones = s.bones();
  if (bones.empty()) throw ValidationError("skeleton has no bones");
  std::vector<Vec3> out;
  out.reserve(bones.size() * per_bone);
  for (const auto& b : bones) {
    const Vec3& a = s.joints[b.parent].pos;
    const Vec3& c = s.joints[b.child].pos;
    for (int i = 0; i < per_bone; ++i)
      out.push_back(a + (static_cast<double>(i) / (per_bone - 1)) * (c - a));
  }
  return out;
}

inline double cd_j2j(const Skeleton& pred, const Skeleton& truth) {
  require(!pred.empty() && !truth.empty(), "cd_j2j: empty skeleton");
  return chamfer_l1(pred.positions(), truth.positions());
}

/// 0.5 * (mean over predicted joints of the distance to the true bone samples
///      + mean over true joints of the distance to the predicted bone samples).
inline double cd_j2b(const Skeleton& pred, const Skeleton& truth, int per_bone = 32) {
  require(!pred.empty() && !truth.empty(), "cd_j2b: empty skeleton");
  const auto pb = bone_samples(pred, per_bone);
  const auto tb = bone_samples(truth, per_bone);
  return 0.5 * (mean_nearest_distance(pred.positions(), tb) +
                mean_nearest_distance(truth.positions(), pb));
}

inline double cd_b2b(const Skeleton& pred, const Skeleton& truth, int per_bone = 32) {
  return chamfer_l1(bone_samples(pred, per_bone), bone_samples(truth, per_bone));
}

struct SkeletonMetrics {
  double cd_j2j = 0.0;
  double cd_j2b = 0.0;
  double cd_b2b = 0.0;
};

inline SkeletonMetrics skeleton_metrics(const Skeleton& pred, const Skeleton& truth,
                                        int per_bone = 32) {
  return {cd_j2j(pred, truth), cd_j2b(pred, truth, per_bone), cd_b2b(pred, truth, per_bone)};
}

inline nlohmann::json metrics_to_json(const SkeletonMetrics& m) {
  return {{"cd_j2j", m.cd_j2j}, {"cd_j2b", m.cd_j2b}, {"cd_b2b", m.cd_b2b}};
}

}  // namespace skf
