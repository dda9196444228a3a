// Training objectives with analytic gradients.
//
// Each loss takes an optional gradient span (same length as the prediction)
// which, when non-empty, receives dLoss/dPrediction. Hinge and absolute-value
// kinks use a zero subgradient.
#pragma once

#include "skelfield/core.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <vector>

namespace skf {

namespace detail {
template <class T>
T sign(T x) {
  return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0));
}
}  // namespace detail

/// Two-sided Dice loss on occupancy vectors:
///   1 - sum(p*y)/sum(p+y) - sum((1-p)(1-y))/sum(2-p-y).
/// A fraction whose denominator is zero takes its agreement limit 1/2.
template <class T>
T dice_loss(std::span<const T> pred, std::span<const T> target,
            std::span<T> grad = {}) {
  require(pred.size() == target.size(), "dice_loss: length mismatch");
  T a = 0, b = 0, c = 0, d = 0;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    a += pred[n] * target[n];
    b += pred[n] + target[n];
    c += (T(1) - pred[n]) * (T(1) - target[n]);
    d += T(2) - pred[n] - target[n];
  }
  const bool pos_ok = b != T(0);
  const bool neg_ok = d != T(0);
  const T f1 = pos_ok ? a / b : T(0.5);
  const T f2 = neg_ok ? c / d : T(0.5);
  if (!grad.empty()) {
    require(grad.size() == pred.size(), "dice_loss: gradient length mismatch");
    for (std::size_t n = 0; n < pred.size(); ++n) {
      const T df1 = pos_ok ? (target[n] * b - a) / (b * b) : T(0);
      const T df2 = neg_ok ? (c - (T(1) - target[n]) * d) / (d * d) : T(0);
      grad[n] = -df1 - df2;
    }
  }
  return T(1) - f1 - f2;
}

/// Sum of absolute differences.
template <class T>
T l1_field_loss(std::span<const T> pred, std::span<const T> target,
                std::span<T> grad = {}, T scale = T(1)) {
  require(pred.size() == target.size(), "l1_field_loss: length mismatch");
  T acc = 0;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    const T r = pred[n] - target[n];
    acc += std::abs(r);
    if (!grad.empty()) grad[n] = scale * detail::sign(r);
  }
  return acc;
}

/// Per-point mean of the L1 loss, the K-independent reporting variant.
template <class T>
T l1_field_mean(std::span<const T> pred, std::span<const T> target) {
  require(!pred.empty(), "l1_field_mean: empty input");
  return l1_field_loss(pred, target) / static_cast<T>(pred.size());
}

/// Sum |P(v) - P(phi(v))| when the shape is symmetric, else 0.
template <class T>
T symmetry_loss(std::span<const T> pred, std::span<const T> mirrored,
                bool symmetric, std::span<T> grad_pred = {},
                std::span<T> grad_mirrored = {}, T scale = T(1)) {
  require(pred.size() == mirrored.size(), "symmetry_loss: length mismatch");
  for (auto& g : grad_pred) g = 0;
  for (auto& g : grad_mirrored) g = 0;
  if (!symmetric) return T(0);
  T acc = 0;
  for (std::size_t n = 0; n < pred.size(); ++n) {
    const T r = pred[n] - mirrored[n];
    acc += std::abs(r);
    if (!grad_pred.empty()) grad_pred[n] = scale * detail::sign(r);
    if (!grad_mirrored.empty()) grad_mirrored[n] = -scale * detail::sign(r);
  }
  return acc;
}

struct DiscriminativeParams {
  double delta_var = 0.1;
  double delta_dist = 0.5;
  double w_var = 1.0;
  double w_dist = 1.0;
  double w_reg = 0.001;

  void validate() const {
    require(delta_var > 0.0 && delta_var < delta_dist,
            "discriminative params: need 0 < delta_var < delta_dist");
  }
};

template <class T>
struct DiscriminativeTerms {
  T total = 0;
  T var = 0;
  T dist = 0;
  T reg = 0;
};

/// Pull/push/regularize embedding loss over instance clusters.
/// `embeddings` is E x N (one column per point); `grad`, when given, is
/// resized to E x N and receives d(total)/d(embeddings).
template <class T>
DiscriminativeTerms<T> discriminative_loss(
    const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& embeddings,
    std::span<const int> labels, const DiscriminativeParams& params,
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>* grad = nullptr,
    T scale = T(1)) {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using VecT = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  params.validate();
  const auto n = static_cast<Eigen::Index>(labels.size());
  require(embeddings.cols() == n, "discriminative_loss: label count mismatch");
  require(n > 0, "degenerate labeling");

  // Clusters are the labels present, in ascending order.
  std::map<int, int> cluster_of;
  for (int l : labels) cluster_of.emplace(l, 0);
  int next = 0;
  for (auto& [label, c] : cluster_of) c = next++;
  const int nc = next;
  std::vector<int> member(static_cast<std::size_t>(n));
  std::vector<int> count(static_cast<std::size_t>(nc), 0);
  const auto e = embeddings.rows();
  Mat mu = Mat::Zero(e, nc);
  for (Eigen::Index i = 0; i < n; ++i) {
    member[i] = cluster_of[labels[i]];
    ++count[member[i]];
    mu.col(member[i]) += embeddings.col(i);
  }
  for (int c = 0; c < nc; ++c) {
    if (count[c] == 0) throw ValidationError("degenerate labeling");
    mu.col(c) /= static_cast<T>(count[c]);
  }

  const T dv = static_cast<T>(params.delta_var);
  const T dd = static_cast<T>(params.delta_dist);
  const T inv_c = T(1) / static_cast<T>(nc);
  DiscriminativeTerms<T> out;
  Mat g_mu = Mat::Zero(e, nc);  // d(total)/d(mu) from the dist and reg terms
  Mat g_x;
  if (grad) g_x = Mat::Zero(e, n);

  // Variance: direct dependence on x_i and through mu_c.
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = member[i];
    const VecT d = mu.col(c) - embeddings.col(i);
    const T r = d.norm();
    const T h = std::max(r - dv, T(0));
    out.var += h * h / static_cast<T>(count[c]);
    if (grad && h > T(0)) {
      const VecT g = (scale * static_cast<T>(params.w_var) * inv_c * T(2) * h /
                      (static_cast<T>(count[c]) * r)) * d;
      g_x.col(i) -= g;
      g_mu.col(c) += g;
    }
  }
  out.var *= inv_c;

  if (nc > 1) {
    const T norm = T(1) / static_cast<T>(nc * (nc - 1));
    for (int a = 0; a < nc; ++a)
      for (int b = 0; b < nc; ++b) {
        if (a == b) continue;
        const VecT d = mu.col(a) - mu.col(b);
        const T r = d.norm();
        const T h = std::max(T(2) * dd - r, T(0));
        out.dist += h * h;
        if (grad && h > T(0) && r > T(0)) {
          // Each ordered pair moves both endpoints.
          const VecT g = (scale * static_cast<T>(params.w_dist) * norm * T(2) * h / r) * d;
          g_mu.col(a) -= g;
          g_mu.col(b) += g;
        }
      }
    out.dist *= norm;
  }

  for (int c = 0; c < nc; ++c) {
    const T r = mu.col(c).norm();
    out.reg += r;
    if (grad && r > T(0))
      g_mu.col(c) += (scale * static_cast<T>(params.w_reg) * inv_c / r) * mu.col(c);
  }
  out.reg *= inv_c;

  out.total = static_cast<T>(params.w_var) * out.var +
              static_cast<T>(params.w_dist) * out.dist +
              static_cast<T>(params.w_reg) * out.reg;

  if (grad) {
    for (Eigen::Index i = 0; i < n; ++i)
      g_x.col(i) += g_mu.col(member[i]) / static_cast<T>(count[member[i]]);
    *grad = std::move(g_x);
  }
  return out;
}

}  // namespace skf
