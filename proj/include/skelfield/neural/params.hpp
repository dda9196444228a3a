// Named parameter tensors with matching gradient buffers.
#pragma once

#include "skelfield/core.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace skf::nn {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <class T>
struct Param {
  std::string name;
  Mat<T> value;
  Mat<T> grad;
};

template <class T>
class ParamStore {
 public:
  int add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    params_.push_back({std::move(name), Mat<T>::Zero(rows, cols), Mat<T>::Zero(rows, cols)});
    return static_cast<int>(params_.size()) - 1;
  }

  Param<T>& operator[](int i) { return params_[i]; }
  const Param<T>& operator[](int i) const { return params_[i]; }
  std::size_t count() const { return params_.size(); }

  int find(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].name == name) return static_cast<int>(i);
    return -1;
  }

  void zero_grad() {
    for (auto& p : params_) p.grad.setZero();
  }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
    return n;
  }

  /// (tensor, offset) of a flat parameter index across all tensors.
  std::pair<int, Eigen::Index> locate(std::size_t flat) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto sz = static_cast<std::size_t>(params_[i].value.size());
      if (flat < sz) return {static_cast<int>(i), static_cast<Eigen::Index>(flat)};
      flat -= sz;
    }
    throw ValidationError("parameter index out of range");
  }

  T& value_at(std::size_t flat) {
    auto [i, k] = locate(flat);
    return params_[i].value.data()[k];
  }
  T grad_at(std::size_t flat) const {
    auto [i, k] = locate(flat);
    return params_[i].grad.data()[k];
  }

  bool all_finite() const {
    for (const auto& p : params_)
      if (!p.value.allFinite()) return false;
    return true;
  }

  template <class U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& p : params_) {
      const int i = out.add(p.name, p.value.rows(), p.value.cols());
      out[i].value = p.value.template cast<U>();
    }
    return out;
  }

 private:
  std::vector<Param<T>> params_;
};

}  // namespace skf::nn
