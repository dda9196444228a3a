#include "testing.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace skf;
using skf::testing::chain;
using skf::testing::random_point;

namespace {

constexpr double kSigma = 0.04;

Skeleton star() {
  Skeleton s;
  s.joints = {{Vec3(0, 0, 0), std::nullopt},
              {Vec3(0.3, 0, 0), 0},
              {Vec3(0, 0.3, 0), 0},
              {Vec3(-0.3, 0, 0), 0},
              {Vec3(0.3, 0.3, 0.1), 1}};
  return s;
}

double brute_min_joint(const Skeleton& s, const Vec3& p) {
  double best = 1e300;
  for (const auto& j : s.joints) {
    const Vec3 d = j.pos - p;
    best = std::min(best, std::sqrt(d.x() * d.x() + d.y() * d.y() + d.z() * d.z()));
  }
  return best;
}

/// Segment distance by dense parameter scan plus endpoint checks.
double scan_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  double best = 1e300;
  const int n = 20000;
  for (int i = 0; i <= n; ++i) best = std::min(best, (a + (b - a) * (double(i) / n) - p).norm());
  return best;
}

}  // namespace

TEST(JointField, PeakAtJoint) {
  const auto s = star();
  for (const auto& j : s.joints) EXPECT_DOUBLE_EQ(gt_joint_prob(s, j.pos, kSigma), 1.0);
}

TEST(JointField, OneSigmaValue) {
  const auto s = chain({Vec3(0, 0, 0)});
  EXPECT_NEAR(gt_joint_prob(s, Vec3(kSigma, 0, 0), kSigma), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(std::exp(-0.5), 0.6065, 1e-4);
}

TEST(JointField, UsesNearestJoint) {
  const auto s = star();
  Rng rng(1);
  for (int i = 0; i < 500; ++i) {
    const Vec3 p = random_point(rng);
    const double d = brute_min_joint(s, p);
    EXPECT_NEAR(gt_joint_prob(s, p, kSigma), std::exp(-d * d / (2 * kSigma * kSigma)), 1e-12);
  }
}

TEST(RootField, Examples) {
  const auto s = chain({Vec3(0, 0, 0), Vec3(3 * kSigma, 0, 0)});
  EXPECT_DOUBLE_EQ(gt_root_prob(s, Vec3::Zero(), kSigma), 1.0);
  EXPECT_NEAR(gt_root_prob(s, s.joints[1].pos, kSigma), std::exp(-4.5), 1e-15);
  EXPECT_NEAR(std::exp(-4.5), 0.0111, 1e-4);
}

TEST(BoneField, Examples) {
  const auto s = chain({Vec3(0, 0, 0), Vec3(0.4, 0, 0)});
  EXPECT_DOUBLE_EQ(gt_bone_prob(s, Vec3(0.17, 0, 0), kSigma), 1.0);
  EXPECT_NEAR(gt_bone_prob(s, Vec3(0.2, kSigma, 0), kSigma), std::exp(-0.5), 1e-12);
}

TEST(BoneField, ThreeBoneChainMatchesScan) {
  const auto s = chain({Vec3(-0.3, 0, 0), Vec3(0, 0.2, 0), Vec3(0.2, 0.2, 0.2), Vec3(0.3, -0.2, 0)});
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const Vec3 p = random_point(rng);
    double d = 1e300;
    for (std::size_t k = 1; k < s.size(); ++k)
      d = std::min(d, scan_segment(p, s.joints[k - 1].pos, s.joints[k].pos));
    EXPECT_NEAR(nearest_bone_distance(s, p), d, 1e-4);
  }
}

TEST(BoneField, NoBonesRejected) {
  const auto s = chain({Vec3::Zero()});
  EXPECT_THROW(gt_bone_prob(s, Vec3::Zero(), kSigma), ValidationError);
}

TEST(InstanceLabel, Examples) {
  const auto s = star();
  EXPECT_EQ(instance_label(s, s.joints[2].pos), 2);
  // Equidistant to joints 1 and 3 (and closer to 0): exact tie between 1 and 3
  // is only possible off the x axis, so use a skeleton where 0 is far away.
  Skeleton t;
  t.joints = {{Vec3(0, 1, 0), std::nullopt}, {Vec3(0.2, 0, 0), 0}, {Vec3(0, 0.5, 0), 0}, {Vec3(-0.2, 0, 0), 0}};
  EXPECT_EQ(instance_label(t, Vec3(0, 0, 0)), 1);
}

TEST(InstanceLabel, MatchesExhaustiveArgmin) {
  const auto s = star();
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const Vec3 p = random_point(rng);
    int best = 0;
    for (int j = 1; j < static_cast<int>(s.size()); ++j)
      if ((s.joints[j].pos - p).norm() < (s.joints[best].pos - p).norm()) best = j;
    EXPECT_EQ(instance_label(s, p), best);
  }
}

TEST(Targets, OwnJointsHaveUnitJointProbability) {
  const auto s = star();
  const auto t = build_targets(s, s.positions(), FieldWidths{});
  for (double v : t.joint_prob) EXPECT_DOUBLE_EQ(v, 1.0);
  for (int j = 0; j < static_cast<int>(s.size()); ++j) EXPECT_EQ(t.instance[j], j);
}

TEST(Targets, BatchEqualsScalarOracles) {
  const auto s = star();
  Rng rng(4);
  std::vector<Vec3> pts(200);
  for (auto& p : pts) p = random_point(rng);
  const FieldWidths w{0.04, 0.06};
  const auto t = build_targets(s, pts, w);
  ASSERT_EQ(t.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(t.joint_prob[i], gt_joint_prob(s, pts[i], w.joint));
    EXPECT_EQ(t.root_prob[i], gt_root_prob(s, pts[i], w.joint));
    EXPECT_EQ(t.bone_prob[i], gt_bone_prob(s, pts[i], w.bone));
    EXPECT_EQ(t.instance[i], instance_label(s, pts[i]));
  }
  const std::vector<Vec3> one{pts[0]};
  const auto single = build_targets(s, one, w);
  EXPECT_EQ(single.joint_prob[0], t.joint_prob[0]);
}

TEST(Targets, ValuesInUnitInterval) {
  const auto s = star();
  Rng rng(5);
  std::vector<Vec3> pts(1000);
  for (auto& p : pts) p = random_point(rng, -1, 1);
  const auto t = build_targets(s, pts, FieldWidths{});
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (double v : {t.joint_prob[i], t.root_prob[i], t.bone_prob[i]}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    // The root is a joint and lies on a bone.
    EXPECT_LE(t.root_prob[i], t.joint_prob[i]);
    EXPECT_GE(t.bone_prob[i], t.joint_prob[i] - 1e-15);
  }
}

TEST(SkeletonJson, RoundTrip) {
  const auto s = star();
  const auto back = skeleton_from_json(skeleton_to_json(s));
  ASSERT_EQ(back.size(), s.size());
  EXPECT_EQ(back.root, s.root);
  for (std::size_t j = 0; j < s.size(); ++j) {
    EXPECT_EQ(back.joints[j].pos, s.joints[j].pos);
    EXPECT_EQ(back.joints[j].parent, s.joints[j].parent);
  }
}

TEST(SkeletonJson, IdsAreRemapped) {
  const auto j = nlohmann::json::parse(
      R"({"joints":[{"id":7,"pos":[0,0,0],"parent":null},{"id":3,"pos":[1,0,0],"parent":7}],"root":7})");
  const auto s = skeleton_from_json(j);
  EXPECT_EQ(s.root, 0);
  EXPECT_EQ(s.joints[1].parent, 0);
}

TEST(SkeletonValidate, Errors) {
  Skeleton two_roots;
  two_roots.joints = {{Vec3::Zero(), std::nullopt}, {Vec3::UnitX(), std::nullopt}};
  EXPECT_THROW(two_roots.validate(), ValidationError);

  Skeleton cycle;
  cycle.joints = {{Vec3::Zero(), std::nullopt}, {Vec3::UnitX(), 2}, {Vec3::UnitY(), 1}};
  EXPECT_THROW(cycle.validate(), ValidationError);

  Skeleton self;
  self.joints = {{Vec3::Zero(), std::nullopt}, {Vec3::UnitX(), 1}};
  EXPECT_THROW(self.validate(), ValidationError);

  EXPECT_THROW(Skeleton{}.validate(), ValidationError);
  EXPECT_THROW(skeleton_from_json(nlohmann::json::parse(R"({"joints":[]})")), ValidationError);
  EXPECT_THROW(skeleton_from_json(nlohmann::json::parse(
                   R"({"joints":[{"id":0,"pos":[0,0,0],"parent":4}],"root":0})")),
               ValidationError);
}

TEST(SkeletonTopology, OrderAndDepth) {
  const auto s = star();
  const auto order = s.topological_order();
  ASSERT_EQ(order.size(), s.size());
  std::vector<int> pos(s.size());
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = static_cast<int>(i);
  for (const auto& b : s.bones()) EXPECT_LT(pos[b.parent], pos[b.child]);
  EXPECT_EQ(s.depth(0), 0);
  EXPECT_EQ(s.depth(4), 2);
}

TEST(OracleFields, MatchesScalarOraclesAndOneHot) {
  const auto s = star();
  const OracleFields oracle(s);
  Rng rng(6);
  std::vector<Vec3> pts(100);
  for (auto& p : pts) p = random_point(rng);
  const auto v = oracle.evaluate(pts);
  ASSERT_EQ(v.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(v.joint[i], gt_joint_prob(s, pts[i], kSigma));
    EXPECT_EQ(v.root[i], gt_root_prob(s, pts[i], kSigma));
    EXPECT_EQ(v.bone[i], gt_bone_prob(s, pts[i], kSigma));
    ASSERT_EQ(v.embedding[i].size(), static_cast<Eigen::Index>(s.size()));
    EXPECT_EQ(v.embedding[i].sum(), 1.0);
    EXPECT_EQ(v.embedding[i][instance_label(s, pts[i])], 1.0);
  }
}

TEST(OracleFields, SingleJointHasZeroBoneField) {
  const OracleFields oracle(chain({Vec3::Zero()}));
  const std::vector<Vec3> pts{Vec3::Zero(), Vec3(0.1, 0, 0)};
  const auto v = oracle.evaluate(pts);
  EXPECT_EQ(v.bone[0], 0.0);
  EXPECT_EQ(v.joint[0], 1.0);
}
