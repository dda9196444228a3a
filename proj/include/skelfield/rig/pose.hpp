// Forward kinematics and linear blend skinning, plus rig and pose-clip IO.
#pragma once

#include "skelfield/rig/skinning.hpp"

#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace skf {

using Quat = Eigen::Quaterniond;
using Transform = Eigen::Isometry3d;

/// Local joint rotations plus a translation of the root.
struct Pose {
  std::vector<Quat> rotations;
  Vec3 root_translation = Vec3::Zero();

  static Pose identity(std::size_t joints) {
    return {std::vector<Quat>(joints, Quat::Identity()), Vec3::Zero()};
  }

  void validate(std::size_t joints) const {
    require(rotations.size() == joints, "pose: expected " + std::to_string(joints) +
                                            " rotations, got " + std::to_string(rotations.size()));
    for (const auto& q : rotations)
      require(std::abs(q.norm() - 1.0) <= 1e-6, "pose: rotation is not a unit quaternion");
    require(root_translation.allFinite(), "pose: non-finite root translation");
  }
};

/// From (x, y, z, w) components.
inline Quat quat_xyzw(double x, double y, double z, double w) { return Quat(w, x, y, z); }

/// Rest transform of each joint: a pure translation to its rest position.
inline std::vector<Transform> rest_transforms(const Skeleton& skel) {
  std::vector<Transform> out;
  for (const auto& j : skel.joints) {
    Transform t = Transform::Identity();
    t.translation() = j.pos;
    out.push_back(t);
  }
  return out;
}

/// global(j) = global(parent) * offset(j) * local(j), offset being the rest
/// translation from the parent; the root offset includes the pose translation.
inline std::vector<Transform> forward_kinematics(const Skeleton& skel, const Pose& pose) {
  skel.validate();
  pose.validate(skel.size());
  std::vector<Transform> global(skel.size(), Transform::Identity());
  for (int j : skel.topological_order()) {
    const auto& joint = skel.joints[j];
    Transform offset = Transform::Identity();
    if (joint.parent) {
      offset.translation() = joint.pos - skel.joints[*joint.parent].pos;
      global[j] = global[*joint.parent] * offset;
    } else {
      offset.translation() = joint.pos + pose.root_translation;
      global[j] = offset;
    }
    global[j].rotate(pose.rotations[j]);
  }
  return global;
}

/// v' = sum_j w_vj * G_j * B_j^-1 * v.
inline Mesh apply_pose(const RigModel& rig, const Pose& pose) {
  const auto global = forward_kinematics(rig.skeleton, pose);
  const auto rest = rest_transforms(rig.skeleton);
  std::vector<Transform> skin(global.size());
  for (std::size_t j = 0; j < global.size(); ++j) skin[j] = global[j] * rest[j].inverse();
  Mesh out = rig.mesh;
  for (std::size_t v = 0; v < out.vertices.size(); ++v) {
    Vec3 acc = Vec3::Zero();
    for (const auto& [j, w] : rig.weights[v]) acc += w * (skin[j] * rig.mesh.vertices[v]);
    out.vertices[v] = acc;
  }
  return out;
}

// ---------------------------------------------------------------- IO

/// {"mesh": path, "skeleton": {...}, "weights": [[[joint, weight], ...], ...]}
inline nlohmann::json rig_to_json(const RigModel& rig, const std::string& mesh_path) {
  nlohmann::json w = nlohmann::json::array();
  for (const auto& row : rig.weights) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& [j, x] : row) r.push_back({j, x});
    w.push_back(std::move(r));
  }
  return {{"mesh", mesh_path}, {"skeleton", skeleton_to_json(rig.skeleton)}, {"weights", std::move(w)}};
}

/// The mesh path is resolved relative to `base_dir` when not absolute.
inline RigModel rig_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  try {
    RigModel rig;
    std::filesystem::path mesh_path = j.at("mesh").get<std::string>();
    if (mesh_path.is_relative()) mesh_path = base_dir / mesh_path;
    rig.mesh = read_obj(mesh_path.string());
    rig.skeleton = skeleton_from_json(j.at("skeleton"));
    for (const auto& row : j.at("weights")) {
      WeightRow r;
      for (const auto& e : row) r.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
      rig.weights.push_back(std::move(r));
    }
    rig.validate();
    return rig;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("rig: malformed JSON: ") + e.what());
  }
}

inline RigModel read_rig(const std::string& path) {
  return rig_from_json(read_json(path), std::filesystem::path(path).parent_path());
}

struct PoseFrame {
  int frame = 0;
  Pose pose;
};

/// [{"frame": int, "rotations": [[x, y, z, w], ...], "root_t": [x, y, z]}, ...]
inline nlohmann::json clip_to_json(const std::vector<PoseFrame>& clip) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : clip) {
    nlohmann::json rots = nlohmann::json::array();
    for (const auto& q : f.pose.rotations) rots.push_back({q.x(), q.y(), q.z(), q.w()});
    const auto& t = f.pose.root_translation;
    arr.push_back({{"frame", f.frame}, {"rotations", rots}, {"root_t", {t.x(), t.y(), t.z()}}});
  }
  return arr;
}

inline std::vector<PoseFrame> clip_from_json(const nlohmann::json& j) {
  try {
    require(j.is_array(), "pose clip: expected a JSON array");
    std::vector<PoseFrame> clip;
    for (const auto& f : j) {
      PoseFrame pf;
      pf.frame = f.at("frame").get<int>();
      for (const auto& q : f.at("rotations")) {
        require(q.size() == 4, "pose clip: rotations need 4 components");
        pf.pose.rotations.push_back(quat_xyzw(q[0].get<double>(), q[1].get<double>(),
                                              q[2].get<double>(), q[3].get<double>()));
      }
      if (f.contains("root_t")) {
        const auto& t = f.at("root_t");
        require(t.size() == 3, "pose clip: root_t needs 3 components");
        pf.pose.root_translation = {t[0].get<double>(), t[1].get<double>(), t[2].get<double>()};
      }
      clip.push_back(std::move(pf));
    }
    return clip;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("pose clip: malformed JSON: ") + e.what());
  }
}

}  // namespace skf
