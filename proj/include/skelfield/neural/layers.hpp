// Volumetric building blocks. Volumes are C x R^3 matrices, one column per
// voxel in row-major (z fastest) order.
#pragma once

#include "skelfield/neural/params.hpp"

#include <cmath>

namespace skf::nn {

inline Eigen::Index voxel(int r, int i, int j, int k) {
  return (static_cast<Eigen::Index>(i) * r + j) * r + k;
}

/// 3x3x3 zero-padded patches: (27 C) x R^3, row = c * 27 + tap.
template <class T>
Mat<T> im2col3(const Mat<T>& in, int r) {
  const auto c_in = in.rows();
  Mat<T> cols = Mat<T>::Zero(27 * c_in, in.cols());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k) {
        const auto v = voxel(r, i, j, k);
        int tap = 0;
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj)
            for (int dk = -1; dk <= 1; ++dk, ++tap) {
              const int a = i + di, b = j + dj, c = k + dk;
              if (a < 0 || a >= r || b < 0 || b >= r || c < 0 || c >= r) continue;
              const auto u = voxel(r, a, b, c);
              for (Eigen::Index ch = 0; ch < c_in; ++ch)
                cols(ch * 27 + tap, v) = in(ch, u);
            }
      }
  return cols;
}

/// Adjoint of im2col3.
template <class T>
Mat<T> col2im3(const Mat<T>& cols, int r) {
  const auto c_in = cols.rows() / 27;
  Mat<T> out = Mat<T>::Zero(c_in, cols.cols());
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k) {
        const auto v = voxel(r, i, j, k);
        int tap = 0;
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj)
            for (int dk = -1; dk <= 1; ++dk, ++tap) {
              const int a = i + di, b = j + dj, c = k + dk;
              if (a < 0 || a >= r || b < 0 || b >= r || c < 0 || c >= r) continue;
              const auto u = voxel(r, a, b, c);
              for (Eigen::Index ch = 0; ch < c_in; ++ch)
                out(ch, u) += cols(ch * 27 + tap, v);
            }
      }
  return out;
}

/// 2x2x2 average pooling, R -> R/2.
template <class T>
Mat<T> avgpool2(const Mat<T>& in, int r) {
  const int h = r / 2;
  Mat<T> out = Mat<T>::Zero(in.rows(), static_cast<Eigen::Index>(h) * h * h);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k)
        out.col(voxel(h, i / 2, j / 2, k / 2)) += in.col(voxel(r, i, j, k));
  return out * T(0.125);
}

/// Nearest-neighbour upsampling, R/2 -> R.
template <class T>
Mat<T> upsample2(const Mat<T>& in, int r) {
  const int h = r / 2;
  Mat<T> out(in.rows(), static_cast<Eigen::Index>(r) * r * r);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      for (int k = 0; k < r; ++k)
        out.col(voxel(r, i, j, k)) = in.col(voxel(h, i / 2, j / 2, k / 2));
  return out;
}

template <class T>
Mat<T> avgpool2_backward(const Mat<T>& grad_out, int r) {
  return upsample2(grad_out, r) * T(0.125);
}

template <class T>
Mat<T> upsample2_backward(const Mat<T>& grad_out, int r) {
  return avgpool2(grad_out, r) * T(8);
}

template <class T>
T logistic(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

/// Squeeze-and-excitation style channel gate:
///   g = logistic(excite * relu(squeeze * mean_voxels(F))),  F <- F * g.
template <class T>
struct GateCache {
  Vec<T> mean;
  Vec<T> squeezed;  // pre-activation
  Vec<T> gate;
};

template <class T>
Mat<T> gate_forward(const Mat<T>& f, const Mat<T>& squeeze, const Mat<T>& excite,
                    GateCache<T>& cache) {
  cache.mean = f.rowwise().mean();
  cache.squeezed = squeeze * cache.mean;
  const Vec<T> hidden = cache.squeezed.cwiseMax(T(0));
  cache.gate = (excite * hidden).unaryExpr([](T x) { return logistic(x); });
  return cache.gate.asDiagonal() * f;
}

/// Returns dL/dF and accumulates the gate weight gradients.
template <class T>
Mat<T> gate_backward(const Mat<T>& f, const Mat<T>& grad_out, const Mat<T>& squeeze,
                     const Mat<T>& excite, const GateCache<T>& cache,
                     Mat<T>& grad_squeeze, Mat<T>& grad_excite) {
  const Vec<T> dgate = (grad_out.cwiseProduct(f)).rowwise().sum();
  const Vec<T> dpre =
      dgate.cwiseProduct(cache.gate.cwiseProduct(Vec<T>::Ones(cache.gate.size()) - cache.gate));
  const Vec<T> hidden = cache.squeezed.cwiseMax(T(0));
  grad_excite += dpre * hidden.transpose();
  Vec<T> dhidden = excite.transpose() * dpre;
  for (Eigen::Index i = 0; i < dhidden.size(); ++i)
    if (!(cache.squeezed(i) > T(0))) dhidden(i) = T(0);
  grad_squeeze += dhidden * cache.mean.transpose();
  const Vec<T> dmean = squeeze.transpose() * dhidden;
  Mat<T> df = cache.gate.asDiagonal() * grad_out;
  df.colwise() += dmean / static_cast<T>(f.cols());
  return df;
}

}  // namespace skf::nn
