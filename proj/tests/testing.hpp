// Shared helpers for the unit tests.
#pragma once

#include "skelfield/skelfield.hpp"

#include <filesystem>
#include <string>

namespace skf::testing {

inline Skeleton chain(std::initializer_list<Vec3> pts) {
  Skeleton s;
  int i = 0;
  for (const auto& p : pts) {
    s.joints.push_back({p, i == 0 ? std::nullopt : std::optional<int>(i - 1)});
    ++i;
  }
  return s;
}

/// Fresh empty directory under the working directory.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::current_path() / ("scratch_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Vec3 random_point(Rng& rng, double lo = -0.5, double hi = 0.5) {
  return uniform_in_box(rng, Vec3::Constant(lo), Vec3::Constant(hi));
}

}  // namespace skf::testing
