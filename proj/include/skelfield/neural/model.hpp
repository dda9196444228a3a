// Multi-head implicit skeleton decoder.
//
// Encoder: occupancy (1 x R^3)
//   -> conv3 + relu + gate            (C x R^3)      "block 1"
//   -> avgpool 2 -> conv3 + relu + gate (C x (R/2)^3) "block 2"
//   -> nearest upsample, added to block 1 output      -> feature grid
// Decoder, per query point p:
//   [trilinear(features, p); p] -> linear -> 5 residual FC blocks -> relu
//   -> joint / root / bone logits (logistic) and an E-dim embedding.
#pragma once

#include "skelfield/geometry/grid.hpp"
#include "skelfield/neural/layers.hpp"

#include <cmath>
#include <array>
#include <span>
#include <string>
#include <vector>

namespace skf::nn {

struct ModelConfig {
  int grid_resolution = 32;
  int channels = 16;
  int reduction = 4;
  int hidden = 64;
  int blocks = 5;
  int embed_dim = 8;
  // Multiplier on the point coordinates entering the trunk.
  double coord_scale = 4.0;

  void validate() const {
    require(grid_resolution >= 4 && grid_resolution % 2 == 0,
            "model: grid resolution must be even and >= 4");
    require(channels >= 4, "model: need at least 4 channels");
    require(reduction >= 1 && channels % reduction == 0,
            "model: gate reduction must divide the channel count");
    require(hidden >= 1 && blocks >= 1, "model: empty trunk");
    require(embed_dim >= 2, "model: embedding dimension must be >= 2");
    require(std::isfinite(coord_scale) && coord_scale > 0.0,
            "model: coord_scale must be positive");
  }
};

enum Head : int { kJoint = 0, kRoot = 1, kBone = 2 };

template <class T>
struct FeatureGrid {
  Lattice lattice;
  Mat<T> values;  // C x R^3
};

template <class T>
struct EncoderCache {
  Mat<T> cols1, z1, a1;
  GateCache<T> gate1;
  Mat<T> f1;
  Mat<T> pooled, cols2, z2, a2;
  GateCache<T> gate2;
  Mat<T> f2;
  FeatureGrid<T> features;
};

template <class T>
struct DecoderCache {
  std::vector<TrilinearStencil> stencils;
  Mat<T> x0;                 // (C + 3) x B
  std::vector<Mat<T>> h;     // trunk states h_0 .. h_L, H x B
  std::vector<Mat<T>> n;     // inner pre-activations per block
  Mat<T> top;                // relu(h_L)
  Mat<T> prob;               // 3 x B, logistic outputs
  Mat<T> embed;              // E x B
  bool any_clamped = false;
};

template <class T>
struct QueryResult {
  T joint = 0;
  T root = 0;
  T bone = 0;
  Vec<T> embedding;
  bool clamped = false;
};

template <class T>
class Model {
 public:
  Model() = default;
  explicit Model(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int c = cfg.channels, r = cfg.channels / cfg.reduction, h = cfg.hidden;
    conv1_w_ = params_.add("enc.conv1.weight", c, 27);
    conv1_b_ = params_.add("enc.conv1.bias", c, 1);
    gate1_s_ = params_.add("enc.gate1.squeeze", r, c);
    gate1_e_ = params_.add("enc.gate1.excite", c, r);
    conv2_w_ = params_.add("enc.conv2.weight", c, 27 * c);
    conv2_b_ = params_.add("enc.conv2.bias", c, 1);
    gate2_s_ = params_.add("enc.gate2.squeeze", r, c);
    gate2_e_ = params_.add("enc.gate2.excite", c, r);
    in_w_ = params_.add("dec.fc_in.weight", h, c + 3);
    in_b_ = params_.add("dec.fc_in.bias", h, 1);
    for (int b = 0; b < cfg.blocks; ++b) {
      const std::string p = "dec.block" + std::to_string(b);
      blk_.push_back({params_.add(p + ".fc0.weight", h, h), params_.add(p + ".fc0.bias", h, 1),
                      params_.add(p + ".fc1.weight", h, h), params_.add(p + ".fc1.bias", h, 1)});
    }
    const char* names[3] = {"dec.head_joint", "dec.head_root", "dec.head_bone"};
    for (int k = 0; k < 3; ++k) {
      head_w_[k] = params_.add(std::string(names[k]) + ".weight", 1, h);
      head_b_[k] = params_.add(std::string(names[k]) + ".bias", 1, 1);
    }
    emb_w_ = params_.add("dec.head_embed.weight", cfg.embed_dim, h);
    emb_b_ = params_.add("dec.head_embed.bias", cfg.embed_dim, 1);
  }

  const ModelConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  /// He-style normal initialization; deterministic per seed.
  void initialize(std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto fill = [&](int idx, double stddev) {
      auto& v = params_[idx].value;
      for (Eigen::Index i = 0; i < v.size(); ++i)
        v.data()[i] = static_cast<T>(stddev * normal(rng));
    };
    const double c = cfg_.channels, h = cfg_.hidden, r = cfg_.channels / cfg_.reduction;
    fill(conv1_w_, std::sqrt(2.0 / 27.0));
    fill(conv1_b_, 0.0);
    fill(gate1_s_, 1.0 / std::sqrt(c));
    fill(gate1_e_, 1.0 / std::sqrt(r));
    fill(conv2_w_, std::sqrt(2.0 / (27.0 * c)));
    fill(conv2_b_, 0.0);
    fill(gate2_s_, 1.0 / std::sqrt(c));
    fill(gate2_e_, 1.0 / std::sqrt(r));
    fill(in_w_, std::sqrt(2.0 / (c + 3.0)));
    fill(in_b_, 0.0);
    for (const auto& b : blk_) {
      fill(b.w0, std::sqrt(2.0 / h));
      fill(b.b0, 0.0);
      fill(b.w1, 0.5 * std::sqrt(2.0 / h));
      fill(b.b1, 0.0);
    }
    for (int k = 0; k < 3; ++k) {
      fill(head_w_[k], std::sqrt(1.0 / h));
      params_[head_b_[k]].value.setConstant(T(-2));
    }
    fill(emb_w_, std::sqrt(1.0 / h));
    fill(emb_b_, 0.0);
  }

  // ------------------------------------------------------------ encoder

  EncoderCache<T> encode(const OccupancyGrid& occ) const {
    const int R = cfg_.grid_resolution;
    require(occ.lattice.resolution == R,
            "encode: occupancy resolution does not match the model");
    EncoderCache<T> c;
    Mat<T> x(1, static_cast<Eigen::Index>(occ.values.size()));
    for (std::size_t i = 0; i < occ.values.size(); ++i)
      x(0, static_cast<Eigen::Index>(i)) = static_cast<T>(occ.values[i]);
    c.cols1 = im2col3(x, R);
    c.z1 = P(conv1_w_) * c.cols1;
    c.z1.colwise() += P(conv1_b_).col(0);
    c.a1 = c.z1.cwiseMax(T(0));
    c.f1 = gate_forward(c.a1, P(gate1_s_), P(gate1_e_), c.gate1);
    c.pooled = avgpool2(c.f1, R);
    c.cols2 = im2col3(c.pooled, R / 2);
    c.z2 = P(conv2_w_) * c.cols2;
    c.z2.colwise() += P(conv2_b_).col(0);
    c.a2 = c.z2.cwiseMax(T(0));
    c.f2 = gate_forward(c.a2, P(gate2_s_), P(gate2_e_), c.gate2);
    c.features.lattice = occ.lattice;
    c.features.values = c.f1 + upsample2(c.f2, R);
    return c;
  }

  /// Accumulates encoder parameter gradients from dL/d(features).
  void encode_backward(const EncoderCache<T>& c, const Mat<T>& dfeat) {
    const int R = cfg_.grid_resolution;
    const Mat<T> df2 = upsample2_backward(dfeat, R);
    Mat<T> da2 = gate_backward(c.a2, df2, P(gate2_s_), P(gate2_e_), c.gate2,
                               G(gate2_s_), G(gate2_e_));
    relu_mask(da2, c.z2);
    G(conv2_w_).noalias() += da2 * c.cols2.transpose();
    G(conv2_b_).col(0) += da2.rowwise().sum();
    const Mat<T> dpooled = col2im3<T>(P(conv2_w_).transpose() * da2, R / 2);
    const Mat<T> df1 = dfeat + avgpool2_backward(dpooled, R);
    Mat<T> da1 = gate_backward(c.a1, df1, P(gate1_s_), P(gate1_e_), c.gate1,
                               G(gate1_s_), G(gate1_e_));
    relu_mask(da1, c.z1);
    G(conv1_w_).noalias() += da1 * c.cols1.transpose();
    G(conv1_b_).col(0) += da1.rowwise().sum();
  }

  // ------------------------------------------------------------ decoder

  DecoderCache<T> decode(const FeatureGrid<T>& feat, std::span<const Vec3> pts) const {
    const auto C = feat.values.rows();
    const auto B = static_cast<Eigen::Index>(pts.size());
    DecoderCache<T> c;
    c.stencils.reserve(pts.size());
    c.x0 = Mat<T>::Zero(C + 3, B);
    for (Eigen::Index b = 0; b < B; ++b) {
      const auto s = trilinear_stencil(feat.lattice, pts[b]);
      c.any_clamped = c.any_clamped || s.clamped;
      for (int k = 0; k < 8; ++k)
        c.x0.col(b).head(C) += static_cast<T>(s.weight[k]) *
                               feat.values.col(static_cast<Eigen::Index>(s.index[k]));
      for (int d = 0; d < 3; ++d) c.x0(C + d, b) = static_cast<T>(cfg_.coord_scale * pts[b][d]);
      c.stencils.push_back(s);
    }
    Mat<T> h = P(in_w_) * c.x0;
    h.colwise() += P(in_b_).col(0);
    c.h.push_back(h);
    for (const auto& blk : blk_) {
      Mat<T> nn = P(blk.w0) * c.h.back().cwiseMax(T(0));
      nn.colwise() += P(blk.b0).col(0);
      Mat<T> next = c.h.back() + P(blk.w1) * nn.cwiseMax(T(0));
      next.colwise() += P(blk.b1).col(0);
      c.n.push_back(std::move(nn));
      c.h.push_back(std::move(next));
    }
    c.top = c.h.back().cwiseMax(T(0));
    c.prob.resize(3, B);
    for (int k = 0; k < 3; ++k) {
      Mat<T> z = P(head_w_[k]) * c.top;
      z.array() += P(head_b_[k])(0, 0);
      c.prob.row(k) = z.unaryExpr([](T x) { return logistic(x); });
    }
    c.embed = P(emb_w_) * c.top;
    c.embed.colwise() += P(emb_b_).col(0);
    return c;
  }

  /// Backpropagates dL/d(prob) (3 x B) and dL/d(embed) (E x B); accumulates
  /// decoder gradients and, if `dfeat` is non-null, dL/d(features).
  void decode_backward(const DecoderCache<T>& c, const Mat<T>& dprob,
                       const Mat<T>& dembed, Mat<T>* dfeat) {
    const Mat<T> dz =
        dprob.cwiseProduct(c.prob.cwiseProduct((Mat<T>::Ones(3, c.prob.cols()) - c.prob)));
    Mat<T> dtop = P(emb_w_).transpose() * dembed;
    G(emb_w_).noalias() += dembed * c.top.transpose();
    G(emb_b_).col(0) += dembed.rowwise().sum();
    for (int k = 0; k < 3; ++k) {
      G(head_w_[k]).noalias() += dz.row(k) * c.top.transpose();
      G(head_b_[k])(0, 0) += dz.row(k).sum();
      dtop.noalias() += P(head_w_[k]).transpose() * dz.row(k);
    }
    Mat<T> dh = dtop;
    relu_mask(dh, c.h.back());
    for (int l = static_cast<int>(blk_.size()) - 1; l >= 0; --l) {
      const auto& blk = blk_[l];
      const Mat<T> r = c.n[l].cwiseMax(T(0));
      G(blk.w1).noalias() += dh * r.transpose();
      G(blk.b1).col(0) += dh.rowwise().sum();
      Mat<T> dn = P(blk.w1).transpose() * dh;
      relu_mask(dn, c.n[l]);
      const Mat<T> a = c.h[l].cwiseMax(T(0));
      G(blk.w0).noalias() += dn * a.transpose();
      G(blk.b0).col(0) += dn.rowwise().sum();
      Mat<T> da = P(blk.w0).transpose() * dn;
      relu_mask(da, c.h[l]);
      dh += da;
    }
    G(in_w_).noalias() += dh * c.x0.transpose();
    G(in_b_).col(0) += dh.rowwise().sum();
    if (dfeat) {
      const auto C = dfeat->rows();
      const Mat<T> dx0 = P(in_w_).leftCols(C).transpose() * dh;
      for (std::size_t b = 0; b < c.stencils.size(); ++b) {
        const auto& s = c.stencils[b];
        for (int k = 0; k < 8; ++k)
          dfeat->col(static_cast<Eigen::Index>(s.index[k])) +=
              static_cast<T>(s.weight[k]) * dx0.col(static_cast<Eigen::Index>(b));
      }
    }
  }

  QueryResult<T> query(const FeatureGrid<T>& feat, const Vec3& p) const {
    const auto c = decode(feat, std::span<const Vec3>(&p, 1));
    QueryResult<T> q;
    q.joint = c.prob(kJoint, 0);
    q.root = c.prob(kRoot, 0);
    q.bone = c.prob(kBone, 0);
    q.embedding = c.embed.col(0);
    q.clamped = c.any_clamped;
    return q;
  }

  template <class U>
  Model<U> cast() const {
    Model<U> m(cfg_);
    for (std::size_t i = 0; i < params_.count(); ++i)
      m.params()[static_cast<int>(i)].value = params_[static_cast<int>(i)].value.template cast<U>();
    return m;
  }

 private:
  struct BlockIdx {
    int w0, b0, w1, b1;
  };

  const Mat<T>& P(int i) const { return params_[i].value; }
  Mat<T>& G(int i) { return params_[i].grad; }

  static void relu_mask(Mat<T>& g, const Mat<T>& pre) {
    g = (pre.array() > T(0)).select(g, T(0));
  }

  ModelConfig cfg_;
  ParamStore<T> params_;
  int conv1_w_ = -1, conv1_b_ = -1, gate1_s_ = -1, gate1_e_ = -1;
  int conv2_w_ = -1, conv2_b_ = -1, gate2_s_ = -1, gate2_e_ = -1;
  int in_w_ = -1, in_b_ = -1;
  std::vector<BlockIdx> blk_;
  std::array<int, 3> head_w_{}, head_b_{};
  int emb_w_ = -1, emb_b_ = -1;
};

}  // namespace skf::nn
