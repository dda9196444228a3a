#include "testing.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <sstream>

using namespace skf;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PipelineConfig tiny_trained_config(const fs::path& out) {
  PipelineConfig cfg;
  cfg.out = out.string();
  cfg.families = {"lamp"};
  cfg.data.pool_size = 512;
  cfg.model.grid_resolution = 8;
  cfg.model.channels = 4;
  cfg.model.reduction = 2;
  cfg.model.hidden = 8;
  cfg.model.blocks = 1;
  cfg.train.steps = 3;
  cfg.train.batch = 32;
  cfg.extraction.mean_shift.sample_count = 512;
  cfg.extraction.mean_shift.seed_threshold = 0.01;
  return cfg;
}

}  // namespace

// ------------------------------------------------------------ synth

TEST(Synth, TableTemplate) {
  const auto s = synth({Family::kTable, 0.05}, 1);
  ASSERT_EQ(s.skeleton.size(), 5u);
  EXPECT_EQ(s.skeleton.bones().size(), 4u);
  const auto& root = s.skeleton.joints[s.skeleton.root].pos;
  // Root at the top center: highest joint, centered in x and z.
  EXPECT_NEAR(root.x(), 0.0, 1e-12);
  EXPECT_NEAR(root.z(), 0.0, 1e-12);
  for (const auto& j : s.skeleton.joints) EXPECT_LE(j.pos.y(), root.y());
  for (const auto& b : s.skeleton.bones()) EXPECT_EQ(b.parent, s.skeleton.root);
}

TEST(Synth, ChairTemplate) {
  const auto s = synth({Family::kChair, 0.05}, 1);
  ASSERT_EQ(s.skeleton.size(), 6u);
  const auto& root = s.skeleton.joints[s.skeleton.root].pos;
  EXPECT_NEAR(root.x(), 0.0, 1e-12);
  EXPECT_NEAR(root.z(), 0.0, 1e-12);
  // Back joint: same height as the root, toward the backrest (-z).
  const auto& back = s.skeleton.joints[1].pos;
  EXPECT_NEAR(back.y(), root.y(), 1e-12);
  EXPECT_LT(back.z(), root.z() - 0.1);
}

TEST(Synth, SameSeedSameShape) {
  for (Family f : kAllFamilies) {
    const auto a = synth({f, 0.05}, 9), b = synth({f, 0.05}, 9);
    EXPECT_EQ(a.mesh.vertices, b.mesh.vertices);
    EXPECT_EQ(a.mesh.triangles, b.mesh.triangles);
    EXPECT_EQ(skeleton_to_json(a.skeleton), skeleton_to_json(b.skeleton));
  }
  EXPECT_NE(synth({Family::kTable, 0.05}, 1).mesh.vertices, synth({Family::kTable, 0.05}, 2).mesh.vertices);
}

TEST(Synth, NormalizedWithSeparatedJoints) {
  for (Family f : kAllFamilies)
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto s = synth({f, 0.05}, seed);
      const auto [lo, hi] = s.mesh.bounds();
      EXPECT_NEAR((hi - lo).maxCoeff(), 1.0, 1e-12);
      EXPECT_GE(lo.minCoeff(), -0.5 - 1e-12);
      EXPECT_LE(hi.maxCoeff(), 0.5 + 1e-12);
      EXPECT_GT(s.mesh.signed_volume(), 0.0);
      const auto pos = s.skeleton.positions();
      for (std::size_t i = 0; i < pos.size(); ++i)
        for (std::size_t j = i + 1; j < pos.size(); ++j)
          EXPECT_GT((pos[i] - pos[j]).norm(), 4 * 0.04) << family_name(f);
    }
}

TEST(Synth, UnknownFamilyRejected) {
  EXPECT_THROW(parse_family("sofa"), ValidationError);
  EXPECT_EQ(parse_family("cross"), Family::kCross);
}

// ------------------------------------------------------------ config

TEST(Config, DumpParseRoundTrip) {
  PipelineConfig cfg;
  cfg.seed = 17;
  cfg.families = {"lamp", "cross"};
  cfg.train.learning_rate = 3e-3;
  cfg.extraction.mean_shift.bandwidth = 0.25;
  cfg.train.optimizer = nn::Optimizer::kSgd;
  cfg.oracle = true;
  const std::string text = dump_config(cfg);
  std::istringstream in(text);
  const auto back = parse_config(in);
  EXPECT_EQ(dump_config(back), text);
  EXPECT_EQ(back.seed, 17u);
  EXPECT_EQ(back.families, (std::vector<std::string>{"lamp", "cross"}));
  EXPECT_EQ(back.train.learning_rate, 3e-3);
  EXPECT_TRUE(back.oracle);
}

TEST(Config, DefaultsParseToDefaults) {
  std::istringstream in(dump_config(PipelineConfig{}));
  EXPECT_EQ(dump_config(parse_config(in)), dump_config(PipelineConfig{}));
}

TEST(Config, PartialFileOverridesOnlyGivenKeys) {
  std::istringstream in("[train]\nsteps = 10\n\n[mean_shift]\nmerge_radius = 0.05\n");
  const auto cfg = parse_config(in);
  EXPECT_EQ(cfg.train.steps, 10u);
  EXPECT_EQ(cfg.extraction.mean_shift.merge_radius, 0.05);
  EXPECT_EQ(cfg.train.batch, PipelineConfig{}.train.batch);
}

TEST(Config, Errors) {
  std::istringstream unknown("[train]\nstepz = 10\n");
  EXPECT_THROW(parse_config(unknown), ValidationError);
  std::istringstream bad_value("[train]\nsteps = many\n");
  EXPECT_THROW(parse_config(bad_value), ValidationError);
  std::istringstream no_section("steps = 10\n");
  EXPECT_THROW(parse_config(no_section), ValidationError);
  std::istringstream invalid("[train]\nlearning_rate = -1\n");
  EXPECT_THROW(parse_config(invalid), ValidationError);
}

// ------------------------------------------------------------ pipeline

TEST(Pipeline, OracleRunRecoversAllFamilies) {
  PipelineConfig cfg;
  cfg.oracle = true;
  cfg.families = {"table", "chair", "lamp", "cross"};
  cfg.out = skf::testing::scratch_dir("pipeline_oracle").string();
  const auto report = run_pipeline(cfg);
  ASSERT_EQ(report.shapes.size(), 4u);
  for (const auto& s : report.shapes) {
    EXPECT_EQ(s.joints, s.truth_joints) << s.name;
    EXPECT_TRUE(s.isomorphic) << s.name;
    EXPECT_LT(s.metrics.cd_j2j, 0.5 * 0.04) << s.name;
  }
  for (const char* f : {"report.json", "shapes/table.obj", "truth/chair.json", "rigs/lamp.rig.json"})
    EXPECT_TRUE(fs::exists(fs::path(cfg.out) / f)) << f;
  EXPECT_NO_THROW(read_rig((fs::path(cfg.out) / "rigs" / "cross.rig.json").string()));
}

TEST(Pipeline, OracleReportIsByteIdentical) {
  PipelineConfig cfg;
  cfg.oracle = true;
  cfg.out = skf::testing::scratch_dir("pipeline_det_a").string();
  run_pipeline(cfg);
  PipelineConfig again = cfg;
  again.out = skf::testing::scratch_dir("pipeline_det_b").string();
  run_pipeline(again);
  EXPECT_EQ(slurp(fs::path(cfg.out) / "report.json"), slurp(fs::path(again.out) / "report.json"));
}

TEST(Pipeline, TrainedRunIsDeterministic) {
  const auto a = tiny_trained_config(skf::testing::scratch_dir("pipeline_train_a"));
  const auto b = tiny_trained_config(skf::testing::scratch_dir("pipeline_train_b"));
  const auto ra = run_pipeline(a);
  run_pipeline(b);
  EXPECT_EQ(ra.mode, "trained");
  ASSERT_TRUE(ra.final_loss.has_value());
  for (const char* f : {"report.json", "checkpoint.skfw", "trace.csv"}) {
    const auto x = slurp(fs::path(a.out) / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(fs::path(b.out) / f)) << f;
  }
}

TEST(Pipeline, StageNameIsPrefixed) {
  try {
    run_stage("extract", [] { throw ValidationError("no joint evidence"); });
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(std::string(e.what()), "stage 'extract': no joint evidence");
  }
  EXPECT_THROW(run_stage("train", [] { throw NumericalError("nan"); }), NumericalError);
}

// ------------------------------------------------------------ evaluation

namespace {

void write_skeletons(const fs::path& dir, const std::map<std::string, Skeleton>& s) {
  for (const auto& [name, skel] : s) write_json((dir / (name + ".json")).string(), skeleton_to_json(skel));
}

std::map<std::string, Skeleton> synth_set() {
  return {{"table", synth({Family::kTable, 0.05}, 1).skeleton},
          {"chair", synth({Family::kChair, 0.05}, 1).skeleton},
          {"lamp", synth({Family::kLamp, 0.05}, 1).skeleton}};
}

}  // namespace

TEST(Evaluate, IdenticalDirectoriesScoreZero) {
  const auto truth = skf::testing::scratch_dir("eval_truth_same");
  write_skeletons(truth, synth_set());
  const auto r = evaluate(truth.string(), truth.string());
  ASSERT_EQ(r.shapes.size(), 3u);
  EXPECT_EQ(r.shapes[0].first, "chair");  // sorted by name
  EXPECT_EQ(r.mean.cd_j2j, 0.0);
  EXPECT_EQ(r.mean.cd_b2b, 0.0);
}

TEST(Evaluate, OneShiftedShapeContributesItsShare) {
  const auto truth = skf::testing::scratch_dir("eval_truth");
  const auto pred = skf::testing::scratch_dir("eval_pred");
  auto set = synth_set();
  write_skeletons(truth, set);
  for (auto& j : set["lamp"].joints) j.pos += Vec3(0, 0, 0.01);
  write_skeletons(pred, set);
  const auto r = evaluate(pred.string(), truth.string());
  EXPECT_NEAR(r.mean.cd_j2j, 0.01 / 3.0, 1e-9);
}

TEST(Evaluate, RandomPerturbationsMatchPerShapeAggregation) {
  const auto truth = skf::testing::scratch_dir("eval_truth_rand");
  const auto pred = skf::testing::scratch_dir("eval_pred_rand");
  auto set = synth_set();
  write_skeletons(truth, set);
  Rng rng(3);
  for (auto& [name, s] : set)
    for (auto& j : s.joints) j.pos += skf::testing::random_point(rng, -0.03, 0.03);
  write_skeletons(pred, set);
  const auto r = evaluate(pred.string(), truth.string());
  const auto t = load_skeleton_dir(truth.string());
  double j2j = 0, j2b = 0, b2b = 0;
  for (const auto& [name, s] : set) {
    const auto& g = t.at(name);
    j2j += cd_j2j(s, g) / 3;
    j2b += cd_j2b(s, g) / 3;
    b2b += cd_b2b(s, g) / 3;
  }
  EXPECT_NEAR(r.mean.cd_j2j, j2j, 1e-12);
  EXPECT_NEAR(r.mean.cd_j2b, j2b, 1e-12);
  EXPECT_NEAR(r.mean.cd_b2b, b2b, 1e-12);
  std::ostringstream table;
  print_eval_table(table, r);
  EXPECT_NE(table.str().find("mean"), std::string::npos);
  EXPECT_EQ(eval_to_json(r).at("shapes").size(), 3u);
}

TEST(Evaluate, UnmatchedNamesListed) {
  const auto truth = skf::testing::scratch_dir("eval_truth_unmatched");
  const auto pred = skf::testing::scratch_dir("eval_pred_unmatched");
  auto set = synth_set();
  write_skeletons(truth, set);
  set.erase("lamp");
  set["sofa"] = set["table"];
  write_skeletons(pred, set);
  try {
    evaluate(pred.string(), truth.string());
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("lamp (no prediction)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("sofa (no truth)"), std::string::npos) << msg;
  }
}

TEST(Evaluate, ReadsRigFiles) {
  const auto truth = skf::testing::scratch_dir("eval_truth_rig");
  const auto pred = skf::testing::scratch_dir("eval_pred_rig");
  const auto shape = synth({Family::kTable, 0.05}, 1);
  write_json((truth / "table.json").string(), skeleton_to_json(shape.skeleton));
  write_obj((pred / "table.obj").string(), shape.mesh);
  const auto rig = compute_skinning(shape.mesh, shape.skeleton);
  write_json((pred / "table.rig.json").string(), rig_to_json(rig, "table.obj"));
  const auto r = evaluate(pred.string(), truth.string());
  ASSERT_EQ(r.shapes.size(), 1u);
  EXPECT_EQ(r.mean.cd_j2j, 0.0);
}
