// Central finite differences with a kink detector, shared by the gradient
// tests and the acceptance suite.
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

namespace skf::testing {

/// dF/dx by central differences, or nullopt when the one-sided slopes
/// disagree (a ReLU, |.| or hinge kink lies within h of x).
template <class F>
std::optional<double> smooth_derivative(double& x, F&& f, double h = 1e-6) {
  const double saved = x;
  const double f0 = f();
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  const double fwd = (up - f0) / h, bwd = (f0 - down) / h;
  if (std::abs(fwd - bwd) > 1e-3 * (std::abs(fwd) + std::abs(bwd)) + 1e-6) return std::nullopt;
  return (up - down) / (2.0 * h);
}

/// |a - b| / max(|a| + |b|, floor).
inline double relative_error(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max(std::abs(a) + std::abs(b), floor);
}

}  // namespace skf::testing
