// Training-set preparation, the combined skeleton-field loss and the
// optimizer loop.
#pragma once

#include "skelfield/fields.hpp"
#include "skelfield/geometry/symmetry.hpp"
#include "skelfield/losses.hpp"
#include "skelfield/neural/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace skf::nn {

struct DataConfig {
  double sigma = 0.04;
  double band = 0.05;
  std::size_t pool_size = 8192;
  double symmetry_threshold = 0.02;
  double focus_level = 0.1;
};

/// One shape with everything the loss needs, precomputed once.
struct TrainingShape {
  std::string name;
  Mesh mesh;
  Skeleton skeleton;
  OccupancyGrid occupancy;
  std::optional<SymmetryPlane> symmetry;
  std::vector<Vec3> pool;
  std::vector<Vec3> mirrored;  // reflection of each pool point (if symmetric)
  FieldTargets targets;
  // Focus strata over the pool: one per joint (its instance points with joint
  // target >= focus_level), then the remaining points with bone target >=
  // focus_level. Empty strata are dropped.
  std::vector<std::vector<std::size_t>> focus;
};

inline TrainingShape prepare_shape(std::string name, const Mesh& mesh,
                                   const Skeleton& skeleton, int grid_resolution,
                                   const DataConfig& cfg, std::uint64_t seed) {
  require(!skeleton.bones().empty(), "training shape '" + name + "' has no bones");
  TrainingShape s;
  s.name = std::move(name);
  s.mesh = mesh;
  s.skeleton = skeleton;
  s.occupancy = voxelize(mesh, grid_resolution);
  s.symmetry = detect_symmetry(mesh, cfg.symmetry_threshold);
  const InsideTester tester(mesh);
  const auto batch = sample_points(tester, cfg.pool_size, cfg.band, seed);
  s.pool = batch.points;
  s.targets = build_targets(skeleton, s.pool, FieldWidths{cfg.sigma, cfg.sigma});
  if (s.symmetry)
    for (const auto& p : s.pool) s.mirrored.push_back(s.symmetry->reflect(p));
  std::vector<std::vector<std::size_t>> strata(skeleton.size() + 1);
  for (std::size_t i = 0; i < s.pool.size(); ++i) {
    if (s.targets.joint_prob[i] >= cfg.focus_level)
      strata[s.targets.instance[i]].push_back(i);
    else if (s.targets.bone_prob[i] >= cfg.focus_level)
      strata.back().push_back(i);
  }
  for (auto& st : strata)
    if (!st.empty()) s.focus.push_back(std::move(st));
  return s;
}

struct LossWeights {
  double joint = 1.0;
  double root = 1.0;
  double bone = 1.0;
  double sym = 0.5;
  double inst = 1.0;
};

enum class Optimizer { kAdam, kSgd };

struct TrainConfig {
  double learning_rate = 1e-2;
  double final_lr_fraction = 0.1;  // cosine decay floor, 1 = constant
  std::size_t steps = 2000;
  std::size_t batch = 512;
  // Share of each batch drawn from the shape's focus set instead of the whole pool.
  double focus_fraction = 0.5;
  LossWeights weights;
  DiscriminativeParams disc;
  Optimizer optimizer = Optimizer::kAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 7;

  void validate() const {
    require(learning_rate > 0.0, "train: learning rate must be positive");
    require(batch >= 2, "train: batch must be >= 2");
    require(focus_fraction >= 0.0 && focus_fraction <= 1.0,
            "train: focus_fraction must be in [0, 1]");
    require(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0,
            "train: final_lr_fraction must be in (0, 1]");
    disc.validate();
  }
};

/// Unweighted loss terms; `total` is the weighted sum actually optimized.
struct LossTerms {
  double total = 0, joint = 0, root = 0, bone = 0, sym = 0, inst = 0;

  LossTerms& operator+=(const LossTerms& o) {
    total += o.total;
    joint += o.joint;
    root += o.root;
    bone += o.bone;
    sym += o.sym;
    inst += o.inst;
    return *this;
  }
};

/// Combined loss of one shape on the pool entries `idx`. When `backprop` is
/// set, gradients of the weighted total are added to the model's gradient
/// buffers (callers zero them).
template <class T>
LossTerms shape_loss(Model<T>& model, const TrainingShape& shape,
                     std::span<const std::size_t> idx, const LossWeights& w,
                     const DiscriminativeParams& disc, bool backprop) {
  const auto k = idx.size();
  const bool sym = shape.symmetry.has_value() && w.sym != 0.0;
  std::vector<Vec3> pts;
  pts.reserve(sym ? 2 * k : k);
  for (auto i : idx) pts.push_back(shape.pool[i]);
  if (sym)
    for (auto i : idx) pts.push_back(shape.mirrored[i]);

  const auto enc = model.encode(shape.occupancy);
  const auto dec = model.decode(enc.features, pts);
  const auto B = static_cast<Eigen::Index>(pts.size());
  const auto K = static_cast<Eigen::Index>(k);

  Mat<T> dprob = Mat<T>::Zero(3, B);
  Mat<T> dembed = Mat<T>::Zero(dec.embed.rows(), B);
  LossTerms out;

  const std::vector<double>* targets[3] = {&shape.targets.joint_prob,
                                           &shape.targets.root_prob,
                                           &shape.targets.bone_prob};
  const double head_w[3] = {w.joint, w.root, w.bone};
  double* head_out[3] = {&out.joint, &out.root, &out.bone};
  std::vector<T> pred(k), tgt(k), grad(k), mirror(k), grad_m(k);
  for (int h = 0; h < 3; ++h) {
    for (std::size_t j = 0; j < k; ++j) {
      pred[j] = dec.prob(h, static_cast<Eigen::Index>(j));
      tgt[j] = static_cast<T>((*targets[h])[idx[j]]);
    }
    *head_out[h] = static_cast<double>(
        l1_field_loss<T>(pred, tgt, grad, static_cast<T>(head_w[h])));
    for (std::size_t j = 0; j < k; ++j) dprob(h, static_cast<Eigen::Index>(j)) += grad[j];
    if (sym && h != kRoot) {
      for (std::size_t j = 0; j < k; ++j) mirror[j] = dec.prob(h, K + static_cast<Eigen::Index>(j));
      out.sym += static_cast<double>(symmetry_loss<T>(pred, mirror, true, grad, grad_m,
                                                      static_cast<T>(w.sym)));
      for (std::size_t j = 0; j < k; ++j) {
        dprob(h, static_cast<Eigen::Index>(j)) += grad[j];
        dprob(h, K + static_cast<Eigen::Index>(j)) += grad_m[j];
      }
    }
  }

  std::vector<int> labels(k);
  for (std::size_t j = 0; j < k; ++j) labels[j] = shape.targets.instance[idx[j]];
  const Mat<T> emb = dec.embed.leftCols(K);
  Mat<T> gemb;
  const auto terms = discriminative_loss<T>(emb, labels, disc, backprop ? &gemb : nullptr,
                                            static_cast<T>(w.inst));
  out.inst = static_cast<double>(terms.total);
  if (backprop) dembed.leftCols(K) = gemb;

  out.total = w.joint * out.joint + w.root * out.root + w.bone * out.bone +
              w.sym * out.sym + w.inst * out.inst;

  if (backprop) {
    Mat<T> dfeat = Mat<T>::Zero(enc.features.values.rows(), enc.features.values.cols());
    model.decode_backward(dec, dprob, dembed, &dfeat);
    model.encode_backward(enc, dfeat);
  }
  return out;
}

struct TraceRow {
  std::size_t step = 0;
  LossTerms loss;
};

template <class T>
class AdamState {
 public:
  explicit AdamState(const ParamStore<T>& p) {
    for (std::size_t i = 0; i < p.count(); ++i) {
      const auto& v = p[static_cast<int>(i)].value;
      m_.push_back(Mat<T>::Zero(v.rows(), v.cols()));
      v_.push_back(Mat<T>::Zero(v.rows(), v.cols()));
    }
  }

  void step(ParamStore<T>& p, const TrainConfig& cfg, double lr) {
    ++t_;
    const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    const T c1 = T(1) - static_cast<T>(std::pow(cfg.beta1, static_cast<double>(t_)));
    const T c2 = T(1) - static_cast<T>(std::pow(cfg.beta2, static_cast<double>(t_)));
    const T eps = static_cast<T>(cfg.epsilon);
    const T rate = static_cast<T>(lr);
    for (std::size_t i = 0; i < p.count(); ++i) {
      auto& prm = p[static_cast<int>(i)];
      m_[i] = b1 * m_[i] + (T(1) - b1) * prm.grad;
      v_[i] = b2 * v_[i] + (T(1) - b2) * prm.grad.cwiseAbs2();
      prm.value.array() -=
          rate * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
    }
  }

 private:
  std::vector<Mat<T>> m_, v_;
  std::size_t t_ = 0;
};

inline double scheduled_lr(const TrainConfig& cfg, std::size_t step) {
  if (cfg.final_lr_fraction >= 1.0 || cfg.steps <= 1) return cfg.learning_rate;
  const double t = static_cast<double>(step) / static_cast<double>(cfg.steps - 1);
  const double f = cfg.final_lr_fraction;
  return cfg.learning_rate * (f + (1.0 - f) * 0.5 * (1.0 + std::cos(std::numbers::pi * t)));
}

inline std::size_t draw_index(Rng& rng, std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
}

/// Draws `k` pool indices uniformly with replacement.
inline std::vector<std::size_t> draw_batch(Rng& rng, std::size_t pool, std::size_t k) {
  std::vector<std::size_t> idx(k);
  for (auto& i : idx) i = draw_index(rng, pool);
  return idx;
}

/// Stratified draw: round(focus_fraction * k) entries taken round-robin from
/// the focus strata, the rest from the whole pool.
inline std::vector<std::size_t> draw_batch(Rng& rng, const TrainingShape& shape, std::size_t k,
                                           double focus_fraction) {
  auto idx = draw_batch(rng, shape.pool.size(), k);
  if (shape.focus.empty()) return idx;
  const auto nf = static_cast<std::size_t>(std::lround(focus_fraction * static_cast<double>(k)));
  for (std::size_t j = 0; j < nf; ++j) {
    const auto& st = shape.focus[j % shape.focus.size()];
    idx[j] = st[draw_index(rng, st.size())];
  }
  return idx;
}

struct TrainResult {
  std::vector<TraceRow> trace;
};

/// Minimizes the summed per-shape loss; deterministic for a fixed seed.
template <class T>
TrainResult train(Model<T>& model, std::span<const TrainingShape> shapes,
                  const TrainConfig& cfg,
                  const std::function<void(const TraceRow&)>& on_step = {}) {
  cfg.validate();
  require(!shapes.empty(), "train: need at least one training shape");
  TrainResult result;
  Rng rng(cfg.seed ^ 0x5deece66dULL);
  AdamState<T> adam(model.params());
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    model.params().zero_grad();
    TraceRow row;
    row.step = step;
    for (const auto& shape : shapes) {
      const auto idx = draw_batch(rng, shape, cfg.batch, cfg.focus_fraction);
      row.loss += shape_loss(model, shape, idx, cfg.weights, cfg.disc, true);
    }
    if (!std::isfinite(row.loss.total))
      throw NumericalError("non-finite loss at step " + std::to_string(step));
    const double lr = scheduled_lr(cfg, step);
    if (cfg.optimizer == Optimizer::kAdam) {
      adam.step(model.params(), cfg, lr);
    } else {
      for (std::size_t i = 0; i < model.params().count(); ++i) {
        auto& p = model.params()[static_cast<int>(i)];
        p.value -= static_cast<T>(lr) * p.grad;
      }
    }
    if (!model.params().all_finite())
      throw NumericalError("non-finite parameters after step " + std::to_string(step));
    result.trace.push_back(row);
    if (on_step) on_step(row);
  }
  return result;
}

inline void write_trace_csv(std::ostream& out, std::span<const TraceRow> trace) {
  out << "step,total,joint,root,bone,sym,inst\n";
  out.precision(9);
  for (const auto& r : trace)
    out << r.step << ',' << r.loss.total << ',' << r.loss.joint << ',' << r.loss.root << ','
        << r.loss.bone << ',' << r.loss.sym << ',' << r.loss.inst << '\n';
}

inline void write_trace_csv(const std::string& path, std::span<const TraceRow> trace) {
  std::ofstream out(path);
  require(out.good(), "cannot write " + path);
  write_trace_csv(out, trace);
}

/// A trained model bound to one shape's occupancy grid.
template <class T>
class ModelFields final : public FieldSource {
 public:
  ModelFields(const Model<T>& model, const OccupancyGrid& occ)
      : model_(model), enc_(model.encode(occ)) {}

  FieldValues evaluate(std::span<const Vec3> points) const override {
    FieldValues out;
    constexpr std::size_t chunk = 4096;
    for (std::size_t start = 0; start < points.size(); start += chunk) {
      const auto part = points.subspan(start, std::min(chunk, points.size() - start));
      const auto dec = model_.decode(enc_.features, part);
      for (Eigen::Index b = 0; b < dec.prob.cols(); ++b) {
        out.joint.push_back(static_cast<double>(dec.prob(kJoint, b)));
        out.root.push_back(static_cast<double>(dec.prob(kRoot, b)));
        out.bone.push_back(static_cast<double>(dec.prob(kBone, b)));
        out.embedding.push_back(dec.embed.col(b).template cast<double>());
      }
    }
    return out;
  }

 private:
  const Model<T>& model_;
  EncoderCache<T> enc_;
};

/// Dense predictions in double precision.
template <class T>
FieldValues predict_fields(const Model<T>& model, const OccupancyGrid& occ,
                           std::span<const Vec3> pts) {
  return ModelFields<T>(model, occ).evaluate(pts);
}

}  // namespace skf::nn
