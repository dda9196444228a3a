// Annotated skeletons and the ground-truth probability fields built from them.
//
// Every field is an unnormalized Gaussian (peak 1) of a geometric distance:
// to the nearest joint, to the root joint, or to the nearest bone segment.
#pragma once

#include "skelfield/geometry/distance.hpp"
#include "skelfield/geometry/sampling.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace skf {

struct Joint {
  Vec3 pos = Vec3::Zero();
  std::optional<int> parent;
};

struct Bone {
  int child;
  int parent;
};

struct Skeleton {
  std::vector<Joint> joints;
  int root = 0;

  std::size_t size() const { return joints.size(); }
  bool empty() const { return joints.empty(); }

  std::vector<Vec3> positions() const {
    std::vector<Vec3> out;
    out.reserve(joints.size());
    for (const auto& j : joints) out.push_back(j.pos);
    return out;
  }

  std::vector<Bone> bones() const {
    std::vector<Bone> out;
    for (std::size_t j = 0; j < joints.size(); ++j)
      if (joints[j].parent) out.push_back({static_cast<int>(j), *joints[j].parent});
    return out;
  }

  std::vector<std::vector<int>> children() const {
    std::vector<std::vector<int>> ch(joints.size());
    for (const auto& b : bones()) ch[b.parent].push_back(b.child);
    return ch;
  }

  int depth(int j) const {
    int d = 0;
    while (joints[j].parent) {
      j = *joints[j].parent;
      ++d;
    }
    return d;
  }

  /// Joints ordered so every parent precedes its children.
  std::vector<int> topological_order() const {
    std::vector<int> order{root};
    const auto ch = children();
    for (std::size_t i = 0; i < order.size(); ++i)
      for (int c : ch[order[i]]) order.push_back(c);
    return order;
  }

  /// Single parentless root, parent links forming a connected tree.
  void validate() const {
    const int n = static_cast<int>(joints.size());
    require(n > 0, "skeleton: no joints");
    require(root >= 0 && root < n, "skeleton: root index out of range");
    for (int j = 0; j < n; ++j) {
      const auto& p = joints[j].parent;
      if (j == root) {
        require(!p, "skeleton: root has a parent");
        continue;
      }
      require(p.has_value(), "skeleton: joint " + std::to_string(j) +
                                 " has no parent but is not the root");
      require(*p >= 0 && *p < n && *p != j,
              "skeleton: joint " + std::to_string(j) + " has invalid parent");
    }
    require(static_cast<int>(topological_order().size()) == n,
            "skeleton: parent links contain a cycle");
  }
};

// ---------------------------------------------------------------- JSON IO

/// {"joints":[{"id":int,"pos":[x,y,z],"parent":int|null}],"root":int}
inline nlohmann::json skeleton_to_json(const Skeleton& s) {
  nlohmann::json joints = nlohmann::json::array();
  for (std::size_t j = 0; j < s.joints.size(); ++j) {
    const auto& jt = s.joints[j];
    joints.push_back({{"id", j},
                      {"pos", {jt.pos.x(), jt.pos.y(), jt.pos.z()}},
                      {"parent", jt.parent ? nlohmann::json(*jt.parent)
                                           : nlohmann::json(nullptr)}});
  }
  return {{"joints", joints}, {"root", s.root}};
}

inline Skeleton skeleton_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("joints") && j.contains("root"),
          "skeleton json: expected {joints, root}");
  std::map<int, int> index_of;
  const auto& arr = j.at("joints");
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const int id = arr[k].value("id", static_cast<int>(k));
    require(index_of.emplace(id, static_cast<int>(k)).second,
            "skeleton json: duplicate joint id " + std::to_string(id));
  }
  auto resolve = [&](int id) {
    const auto it = index_of.find(id);
    require(it != index_of.end(), "skeleton json: unknown joint id " + std::to_string(id));
    return it->second;
  };
  Skeleton s;
  for (const auto& jt : arr) {
    const auto& p = jt.at("pos");
    require(p.is_array() && p.size() == 3, "skeleton json: pos must be [x,y,z]");
    Joint joint;
    joint.pos = Vec3(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
    if (jt.contains("parent") && !jt.at("parent").is_null())
      joint.parent = resolve(jt.at("parent").get<int>());
    s.joints.push_back(joint);
  }
  s.root = resolve(j.at("root").get<int>());
  s.validate();
  return s;
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  require(out.good(), "cannot write " + path);
  out << j.dump(2) << '\n';
}

inline Skeleton read_skeleton(const std::string& path) {
  return skeleton_from_json(read_json(path));
}

// ---------------------------------------------------------------- oracles

inline double gaussian(double d, double sigma) {
  return std::exp(-(d * d) / (2.0 * sigma * sigma));
}

/// Index of the nearest joint; ties resolve to the lowest index.
inline int instance_label(const Skeleton& s, const Vec3& p) {
  require(!s.empty(), "instance_label: empty skeleton");
  int best = 0;
  double best_d2 = (s.joints[0].pos - p).squaredNorm();
  for (std::size_t j = 1; j < s.joints.size(); ++j) {
    const double d2 = (s.joints[j].pos - p).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<int>(j);
    }
  }
  return best;
}

inline double gt_joint_prob(const Skeleton& s, const Vec3& p, double sigma) {
  require(sigma > 0.0, "sigma must be positive");
  return gaussian((s.joints[instance_label(s, p)].pos - p).norm(), sigma);
}

inline double gt_root_prob(const Skeleton& s, const Vec3& p, double sigma) {
  require(sigma > 0.0, "sigma must be positive");
  require(!s.empty(), "gt_root_prob: empty skeleton");
  return gaussian((s.joints[s.root].pos - p).norm(), sigma);
}

inline double nearest_bone_distance(const Skeleton& s, const Vec3& p) {
  const auto bones = s.bones();
  if (bones.empty()) throw ValidationError("no bones");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& b : bones)
    best = std::min(best, point_to_segment(p, s.joints[b.child].pos,
                                           s.joints[b.parent].pos));
  return best;
}

inline double gt_bone_prob(const Skeleton& s, const Vec3& p, double sigma) {
  require(sigma > 0.0, "sigma must be positive");
  return gaussian(nearest_bone_distance(s, p), sigma);
}

struct FieldTargets {
  std::vector<double> joint_prob;
  std::vector<double> root_prob;
  std::vector<double> bone_prob;
  std::vector<int> instance;

  std::size_t size() const { return joint_prob.size(); }
};

struct FieldWidths {
  double joint = 0.04;
  double bone = 0.04;
};

inline FieldTargets build_targets(const Skeleton& s, std::span<const Vec3> points,
                                  FieldWidths sigma) {
  FieldTargets t;
  t.joint_prob.reserve(points.size());
  for (const auto& p : points) {
    t.joint_prob.push_back(gt_joint_prob(s, p, sigma.joint));
    t.root_prob.push_back(gt_root_prob(s, p, sigma.joint));
    t.bone_prob.push_back(gt_bone_prob(s, p, sigma.bone));
    t.instance.push_back(instance_label(s, p));
  }
  return t;
}

inline FieldTargets build_targets(const Skeleton& s, const SampleBatch& batch,
                                  double sigma) {
  return build_targets(s, batch.points, FieldWidths{sigma, sigma});
}

/// JSON array aligned with the batch order.
inline nlohmann::json targets_to_json(const SampleBatch& batch,
                                      const FieldTargets& t) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& p = batch.points[i];
    arr.push_back({{"p", {p.x(), p.y(), p.z()}},
                   {"inside", static_cast<bool>(batch.inside_mask[i])},
                   {"joint", t.joint_prob[i]},
                   {"root", t.root_prob[i]},
                   {"bone", t.bone_prob[i]},
                   {"instance", t.instance[i]}});
  }
  return arr;
}

// ---------------------------------------------------------- field sources

/// The four fields evaluated at a list of points.
struct FieldValues {
  std::vector<double> joint, root, bone;
  std::vector<Eigen::VectorXd> embedding;

  std::size_t size() const { return joint.size(); }
};

/// Evaluates joint/root/bone probabilities and instance embeddings at
/// arbitrary points; implemented by the ground-truth oracle and by trained
/// models.
class FieldSource {
 public:
  virtual ~FieldSource() = default;
  virtual FieldValues evaluate(std::span<const Vec3> points) const = 0;
};

/// Ground-truth fields of an annotated skeleton. The embedding is the one-hot
/// vector of the instance label. A skeleton without bones has a zero bone field.
class OracleFields final : public FieldSource {
 public:
  OracleFields(Skeleton skeleton, FieldWidths widths = {})
      : skel_(std::move(skeleton)), widths_(widths) {
    skel_.validate();
  }

  FieldValues evaluate(std::span<const Vec3> points) const override {
    FieldValues out;
    const bool has_bones = !skel_.bones().empty();
    const auto n = static_cast<Eigen::Index>(skel_.size());
    for (const auto& p : points) {
      out.joint.push_back(gt_joint_prob(skel_, p, widths_.joint));
      out.root.push_back(gt_root_prob(skel_, p, widths_.joint));
      out.bone.push_back(has_bones ? gt_bone_prob(skel_, p, widths_.bone) : 0.0);
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[instance_label(skel_, p)] = 1.0;
      out.embedding.push_back(std::move(e));
    }
    return out;
  }

  const Skeleton& skeleton() const { return skel_; }

 private:
  Skeleton skel_;
  FieldWidths widths_;
};

}  // namespace skf
