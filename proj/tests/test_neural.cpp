#include "gradcheck.hpp"
#include "testing.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

using namespace skf;
using namespace skf::nn;
using skf::testing::random_point;

namespace {

ModelConfig small_config() {
  ModelConfig mc;
  mc.grid_resolution = 8;
  mc.channels = 4;
  mc.reduction = 2;
  mc.hidden = 12;
  mc.blocks = 2;
  mc.embed_dim = 3;
  return mc;
}

TrainingShape small_shape(Family f = Family::kChair, std::size_t pool = 256) {
  const auto s = synth({f, 0.05}, 1);
  DataConfig dc;
  dc.pool_size = pool;
  return prepare_shape(family_name(f), s.mesh, s.skeleton, small_config().grid_resolution, dc, 3);
}

template <class T>
Mat<T> random_mat(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Mat<T> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(uniform(rng, -1, 1));
  return m;
}

}  // namespace

// ------------------------------------------------------------ layers

TEST(Layers, GateWithZeroWeightsHalvesChannels) {
  Rng rng(1);
  const Mat<double> f = random_mat<double>(rng, 4, 27);
  GateCache<double> cache;
  const Mat<double> out = gate_forward<double>(f, Mat<double>::Zero(2, 4), Mat<double>::Zero(4, 2), cache);
  EXPECT_TRUE(out.isApprox(0.5 * f));
  for (Eigen::Index i = 0; i < cache.gate.size(); ++i) EXPECT_EQ(cache.gate(i), 0.5);
}

TEST(Layers, Im2colAdjoint) {
  Rng rng(2);
  const int r = 4;
  const Mat<double> x = random_mat<double>(rng, 2, r * r * r);
  const Mat<double> y = random_mat<double>(rng, 54, r * r * r);
  const double lhs = (im2col3<double>(x, r).array() * y.array()).sum();
  const double rhs = (x.array() * col2im3<double>(y, r).array()).sum();
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

TEST(Layers, PoolUpsampleAdjoints) {
  Rng rng(3);
  const int r = 4;
  const Mat<double> fine = random_mat<double>(rng, 3, 64);
  const Mat<double> coarse = random_mat<double>(rng, 3, 8);
  EXPECT_NEAR((avgpool2<double>(fine, r).array() * coarse.array()).sum(),
              (fine.array() * avgpool2_backward<double>(coarse, r).array()).sum(), 1e-12);
  EXPECT_NEAR((upsample2<double>(coarse, r).array() * fine.array()).sum(),
              (coarse.array() * upsample2_backward<double>(fine, r).array()).sum(), 1e-12);
}

TEST(Layers, ConvCenterTapIsIdentity) {
  Rng rng(4);
  const int r = 4;
  const Mat<double> x = random_mat<double>(rng, 1, 64);
  Mat<double> w = Mat<double>::Zero(1, 27);
  w(0, 13) = 1.0;  // (0, 0, 0) offset
  EXPECT_TRUE((w * im2col3<double>(x, r)).isApprox(x));
}

// ------------------------------------------------------------ encoder

TEST(Encoder, ZeroOccupancyGivesZeroFeatures) {
  Model<double> m(small_config());
  m.initialize(5);
  OccupancyGrid occ;
  occ.lattice = Lattice::unit_cube(8);
  occ.values.assign(occ.lattice.size(), 0.0);
  const auto enc = m.encode(occ);
  EXPECT_EQ(enc.features.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Encoder, DeterministicForFixedSeed) {
  const auto shape = small_shape();
  Model<float> a(small_config()), b(small_config());
  a.initialize(11);
  b.initialize(11);
  const auto fa = a.encode(shape.occupancy).features.values;
  const auto fb = b.encode(shape.occupancy).features.values;
  ASSERT_EQ(fa.size(), fb.size());
  EXPECT_EQ(std::memcmp(fa.data(), fb.data(), sizeof(float) * fa.size()), 0);
}

TEST(Encoder, ResolutionMismatchRejected) {
  Model<double> m(small_config());
  EXPECT_THROW(m.encode(voxelize(box_mesh(Vec3::Constant(-0.2), Vec3::Constant(0.2)), 16)),
               ValidationError);
}

// ------------------------------------------------------------ decoder

TEST(Decoder, PureFunctionOfQuery) {
  const auto shape = small_shape();
  Model<double> m(small_config());
  m.initialize(6);
  const auto enc = m.encode(shape.occupancy);
  const Vec3 p(0.1, -0.05, 0.2);
  const std::vector<Vec3> pts{p, Vec3(0.3, 0.3, 0.3), p};
  const auto dec = m.decode(enc.features, pts);
  EXPECT_EQ(dec.prob.col(0), dec.prob.col(2));
  EXPECT_EQ(dec.embed.col(0), dec.embed.col(2));
  const auto q = m.query(enc.features, p);
  EXPECT_NEAR(q.joint, dec.prob(kJoint, 0), 1e-15);
}

TEST(Decoder, LatticeNodeUsesThatNodeFeature) {
  const auto shape = small_shape();
  Model<double> m(small_config());
  m.initialize(7);
  const auto enc = m.encode(shape.occupancy);
  const auto& lat = enc.features.lattice;
  const std::size_t node = lat.index(3, 4, 5);
  const std::vector<Vec3> pts{lat.node(node)};
  const auto dec = m.decode(enc.features, pts);
  const auto C = enc.features.values.rows();
  EXPECT_TRUE(dec.x0.col(0).head(C).isApprox(enc.features.values.col(static_cast<Eigen::Index>(node))));
  EXPECT_NEAR(dec.x0(C, 0), m.config().coord_scale * pts[0].x(), 1e-15);
}

TEST(Decoder, HeadsInOpenUnitInterval) {
  const auto shape = small_shape();
  Model<double> m(small_config());
  m.initialize(8);
  const auto enc = m.encode(shape.occupancy);
  Rng rng(8);
  std::vector<Vec3> pts(300);
  for (auto& p : pts) p = random_point(rng, -0.7, 0.7);
  const auto dec = m.decode(enc.features, pts);
  EXPECT_GT(dec.prob.minCoeff(), 0.0);
  EXPECT_LT(dec.prob.maxCoeff(), 1.0);
  EXPECT_TRUE(dec.any_clamped);
}

// ------------------------------------------------------------ backprop

TEST(Backprop, FullLossMatchesFiniteDifferences) {
  const auto shape = small_shape();
  Model<double> m(small_config());
  m.initialize(2);
  Rng rng(9);
  auto& params = m.params();
  for (std::size_t i = 0; i < params.total_size(); ++i) params.value_at(i) += 0.05 * uniform(rng, -1, 1);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < 24; ++i) idx.push_back(draw_index(rng, shape.pool.size()));
  const LossWeights w;
  const DiscriminativeParams disc;
  params.zero_grad();
  shape_loss(m, shape, idx, w, disc, true);
  auto loss = [&] { return shape_loss(m, shape, idx, w, disc, false).total; };
  int checked = 0, kinks = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t f = draw_index(rng, params.total_size());
    const double analytic = params.grad_at(f);
    const auto fd = skf::testing::smooth_derivative(params.value_at(f), loss);
    if (!fd) {
      ++kinks;
      continue;
    }
    ++checked;
    EXPECT_LT(skf::testing::relative_error(analytic, *fd), 1e-4)
        << params[params.locate(f).first].name << " analytic " << analytic << " fd " << *fd;
  }
  EXPECT_GT(checked, 120);
}

TEST(Backprop, NoDeadParameterTensors) {
  const auto shape = small_shape(Family::kTable, 512);
  Model<double> m(small_config());
  m.initialize(3);
  std::vector<std::size_t> idx(256);
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  m.params().zero_grad();
  shape_loss(m, shape, idx, LossWeights{}, DiscriminativeParams{}, true);
  for (std::size_t i = 0; i < m.params().count(); ++i) {
    const auto& p = m.params()[static_cast<int>(i)];
    EXPECT_GT(p.grad.cwiseAbs().maxCoeff(), 0.0) << p.name;
  }
}

// ------------------------------------------------------------ checkpoints

TEST(Checkpoint, RoundTripIsExact) {
  Model<float> a(small_config()), b(small_config());
  a.initialize(12);
  std::stringstream ss;
  write_checkpoint(ss, a.params());
  read_checkpoint(ss, b.params());
  for (std::size_t i = 0; i < a.params().count(); ++i)
    EXPECT_EQ(a.params()[static_cast<int>(i)].value, b.params()[static_cast<int>(i)].value);
}

TEST(Checkpoint, ShapeMismatchRejected) {
  Model<float> a(small_config());
  auto other = small_config();
  other.hidden = 16;
  Model<float> b(other);
  std::stringstream ss;
  write_checkpoint(ss, a.params());
  EXPECT_THROW(read_checkpoint(ss, b.params()), ValidationError);
  std::stringstream bad("not a checkpoint");
  EXPECT_THROW(read_checkpoint(bad, a.params()), ValidationError);
}

// ------------------------------------------------------------ training

TEST(Training, ZeroStepsLeaveParametersUnchanged) {
  const std::vector<TrainingShape> shapes{small_shape()};
  Model<float> m(small_config());
  m.initialize(4);
  const auto before = m.params().cast<float>();
  TrainConfig cfg;
  cfg.steps = 0;
  const auto res = train<float>(m, shapes, cfg);
  EXPECT_TRUE(res.trace.empty());
  for (std::size_t i = 0; i < before.count(); ++i)
    EXPECT_EQ(before[static_cast<int>(i)].value, m.params()[static_cast<int>(i)].value);
}

TEST(Training, TraceIsDeterministic) {
  const std::vector<TrainingShape> shapes{small_shape()};
  TrainConfig cfg;
  cfg.steps = 5;
  cfg.batch = 64;
  std::vector<double> runs[2];
  for (auto& r : runs) {
    Model<float> m(small_config());
    m.initialize(4);
    for (const auto& row : train<float>(m, shapes, cfg).trace) r.push_back(row.loss.total);
  }
  EXPECT_EQ(runs[0], runs[1]);
}

TEST(Training, LossDecreases) {
  const std::vector<TrainingShape> shapes{small_shape(Family::kTable, 1024)};
  TrainConfig cfg;
  cfg.steps = 400;
  cfg.batch = 128;
  Model<float> m(small_config());
  m.initialize(4);
  const auto trace = train<float>(m, shapes, cfg).trace;
  double first = 0, last = 0;
  for (int i = 0; i < 20; ++i) {
    first += trace[i].loss.joint + trace[i].loss.bone;
    last += trace[trace.size() - 1 - i].loss.joint + trace[trace.size() - 1 - i].loss.bone;
  }
  EXPECT_LT(last, 0.7 * first);
}

TEST(Training, CosineScheduleEndpoints) {
  TrainConfig cfg;
  cfg.steps = 101;
  EXPECT_DOUBLE_EQ(scheduled_lr(cfg, 0), cfg.learning_rate);
  EXPECT_NEAR(scheduled_lr(cfg, 100), cfg.learning_rate * cfg.final_lr_fraction, 1e-15);
  for (std::size_t s = 1; s < 101; ++s) EXPECT_LE(scheduled_lr(cfg, s), scheduled_lr(cfg, s - 1));
}

TEST(Training, FocusBatchComposition) {
  const auto shape = small_shape(Family::kTable, 1024);
  // One stratum per joint plus the bone stratum.
  ASSERT_EQ(shape.focus.size(), shape.skeleton.size() + 1);
  for (std::size_t st = 0; st < shape.focus.size(); ++st)
    for (auto i : shape.focus[st]) {
      if (st < shape.skeleton.size()) {
        EXPECT_GE(shape.targets.joint_prob[i], 0.1);
        EXPECT_EQ(shape.targets.instance[i], static_cast<int>(st));
      } else {
        EXPECT_LT(shape.targets.joint_prob[i], 0.1);
        EXPECT_GE(shape.targets.bone_prob[i], 0.1);
      }
    }
  Rng rng(10);
  const auto idx = draw_batch(rng, shape, 100, 0.5);
  ASSERT_EQ(idx.size(), 100u);
  for (std::size_t j = 0; j < 50; ++j) {
    const auto& st = shape.focus[j % shape.focus.size()];
    EXPECT_NE(std::find(st.begin(), st.end(), idx[j]), st.end()) << j;
  }
  for (auto i : idx) EXPECT_LT(i, shape.pool.size());
}

TEST(Training, InvalidConfigRejected) {
  TrainConfig cfg;
  cfg.focus_fraction = 1.5;
  EXPECT_THROW(cfg.validate(), ValidationError);
  ModelConfig mc;
  mc.grid_resolution = 7;
  EXPECT_THROW(mc.validate(), ValidationError);
}

TEST(Prediction, ModelFieldsMatchesDecoder) {
  const auto shape = small_shape();
  Model<double> m(small_config());
  m.initialize(13);
  Rng rng(13);
  std::vector<Vec3> pts(50);
  for (auto& p : pts) p = random_point(rng);
  const auto v = predict_fields(m, shape.occupancy, pts);
  const auto dec = m.decode(m.encode(shape.occupancy).features, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    EXPECT_EQ(v.joint[i], dec.prob(kJoint, static_cast<Eigen::Index>(i)));
    EXPECT_EQ(v.bone[i], dec.prob(kBone, static_cast<Eigen::Index>(i)));
    EXPECT_EQ(v.embedding[i], dec.embed.col(static_cast<Eigen::Index>(i)));
  }
}
