// Adaptive query-point sampling: mostly interior, a thin shell just outside.
#pragma once

#include "skelfield/geometry/inside.hpp"

#include <cmath>
#include <vector>

namespace skf {

struct SampleBatch {
  std::vector<Vec3> points;
  std::vector<bool> inside_mask;

  std::size_t size() const { return points.size(); }
  std::vector<Vec3> inside_points() const {
    std::vector<Vec3> out;
    for (std::size_t i = 0; i < points.size(); ++i)
      if (inside_mask[i]) out.push_back(points[i]);
    return out;
  }
};

struct SampleOptions {
  double inside_fraction = 0.9;
  double band = 0.05;
  // Minimum acceptance rate before rejection sampling gives up.
  double min_acceptance = 1e-3;
  std::size_t min_attempts = 100000;
};

/// Uniform interior points by rejection against the mesh bounding box.
inline std::vector<Vec3> sample_interior(const InsideTester& tester,
                                         std::size_t count, Rng& rng,
                                         const SampleOptions& opt = {}) {
  const auto [lo, hi] = tester.mesh().bounds();
  std::vector<Vec3> out;
  out.reserve(count);
  std::size_t attempts = 0;
  while (out.size() < count) {
    const Vec3 p = uniform_in_box(rng, lo, hi);
    ++attempts;
    if (tester.inside(p)) out.push_back(p);
    if (attempts >= opt.min_attempts &&
        static_cast<double>(out.size()) <
            opt.min_acceptance * static_cast<double>(attempts))
      throw ValidationError("degenerate interior");
  }
  return out;
}

/// Triangle index chooser proportional to area.
class AreaSampler {
 public:
  explicit AreaSampler(const Mesh& mesh) : mesh_(&mesh) {
    cdf_.reserve(mesh.triangles.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      acc += mesh.triangle_area(t);
      cdf_.push_back(acc);
    }
    // Outward normals: flip when the surface winds inward.
    orientation_ = mesh.signed_volume() >= 0.0 ? 1.0 : -1.0;
  }

  /// Surface point and its outward unit normal.
  std::pair<Vec3, Vec3> sample(Rng& rng) const {
    const double r = uniform01(rng) * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), r);
    const std::size_t t = std::min<std::size_t>(
        static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    const auto& f = mesh_->triangles[t];
    double u = uniform01(rng), v = uniform01(rng);
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Vec3& a = mesh_->vertices[f[0]];
    const Vec3 p = a + u * (mesh_->vertices[f[1]] - a) +
                   v * (mesh_->vertices[f[2]] - a);
    return {p, orientation_ * mesh_->triangle_normal(t)};
  }

 private:
  const Mesh* mesh_;
  std::vector<double> cdf_;
  double orientation_ = 1.0;
};

/// floor(0.9 K) interior points followed by K - floor(0.9 K) surface points
/// pushed outward along their normal by Uniform(0, band]. Displaced points
/// that still test inside (concave creases) are redrawn.
inline SampleBatch sample_points(const InsideTester& tester, std::size_t k,
                                 double band, std::uint64_t seed,
                                 const SampleOptions& base = {}) {
  require(k >= 10, "sample_points: K must be >= 10");
  require(band > 0.0, "sample_points: band must be positive");
  SampleOptions opt = base;
  opt.band = band;
  Rng rng(seed);
  const auto n_inside = static_cast<std::size_t>(
      std::floor(opt.inside_fraction * static_cast<double>(k) + 1e-9));
  SampleBatch batch;
  batch.points = sample_interior(tester, n_inside, rng, opt);
  batch.inside_mask.assign(n_inside, true);
  const AreaSampler surface(tester.mesh());
  std::size_t attempts = 0;
  while (batch.points.size() < k) {
    auto [p, n] = surface.sample(rng);
    const double offset = band * (1.0 - uniform01(rng));  // (0, band]
    const Vec3 q = p + offset * n;
    if (++attempts > 1000 * k) throw ValidationError("degenerate surface");
    if (tester.inside(q)) continue;
    batch.points.push_back(q);
    batch.inside_mask.push_back(false);
  }
  return batch;
}

inline SampleBatch sample_points(const Mesh& mesh, std::size_t k, double band,
                                 std::uint64_t seed) {
  return sample_points(InsideTester(mesh), k, band, seed);
}

}  // namespace skf
