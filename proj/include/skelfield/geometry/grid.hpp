// Regular R^3 lattices: occupancy grids, voxelization and trilinear lookup.
#pragma once

#include "skelfield/geometry/inside.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace skf {

/// Node (i, j, k) sits at origin + spacing * (i, j, k). Flat index is
/// row-major with z fastest.
struct Lattice {
  int resolution = 2;
  Vec3 origin = Vec3::Zero();
  double spacing = 1.0;

  std::size_t size() const {
    const auto r = static_cast<std::size_t>(resolution);
    return r * r * r;
  }
  std::size_t index(int i, int j, int k) const {
    const auto r = static_cast<std::size_t>(resolution);
    return (static_cast<std::size_t>(i) * r + j) * r + k;
  }
  Vec3 node(int i, int j, int k) const {
    return origin + spacing * Vec3(i, j, k);
  }
  Vec3 node(std::size_t flat) const {
    const auto r = static_cast<std::size_t>(resolution);
    return node(static_cast<int>(flat / (r * r)),
                static_cast<int>((flat / r) % r), static_cast<int>(flat % r));
  }
  Vec3 upper() const { return origin + spacing * (resolution - 1) * Vec3::Ones(); }

  bool operator==(const Lattice& o) const {
    return resolution == o.resolution && origin == o.origin &&
           spacing == o.spacing;
  }

  /// Cell-centred lattice covering [-0.5, 0.5]^3, the normalized model box.
  static Lattice unit_cube(int resolution) {
    require(resolution >= 2, "lattice resolution must be >= 2");
    Lattice l;
    l.resolution = resolution;
    l.spacing = 1.0 / resolution;
    l.origin = Vec3::Constant(-0.5 + 0.5 * l.spacing);
    return l;
  }
};

struct OccupancyGrid {
  Lattice lattice;
  std::vector<double> values;
  /// Set by voxelize when ray votes disagreed on more than 5% of cells.
  bool watertight_warning = false;

  double at(int i, int j, int k) const { return values[lattice.index(i, j, k)]; }
  std::size_t occupied() const {
    std::size_t n = 0;
    for (double v : values) n += v >= 0.5 ? 1 : 0;
    return n;
  }
};

struct VoxelizeOptions {
  double disagreement_warning = 0.05;
};

/// Cell value is 1 iff the cell centre is inside by 3-ray majority parity.
/// Rays are cast once per lattice column and shared by every cell on it.
inline OccupancyGrid voxelize(const Mesh& mesh, const Lattice& lattice,
                              const VoxelizeOptions& opt = {}) {
  require(lattice.resolution >= 2, "voxelize: resolution must be >= 2");
  require(!mesh.empty(), "voxelize: empty geometry");
  const InsideTester tester(mesh);
  const int R = lattice.resolution;
  std::vector<std::uint8_t> votes(lattice.size(), 0);
  for (int axis = 0; axis < 3; ++axis) {
    const int b = (axis + 1) % 3;
    const int c = (axis + 2) % 3;
    for (int ib = 0; ib < R; ++ib)
      for (int ic = 0; ic < R; ++ic) {
        const double qb = lattice.origin[b] + lattice.spacing * ib;
        const double qc = lattice.origin[c] + lattice.spacing * ic;
        const auto hits = tester.line_crossings(axis, qb, qc);
        if (hits.empty()) continue;
        std::size_t next = 0;  // first crossing strictly above the cell centre
        for (int ia = 0; ia < R; ++ia) {
          const double qa = lattice.origin[axis] + lattice.spacing * ia;
          while (next < hits.size() && hits[next] <= qa) ++next;
          if ((hits.size() - next) % 2 == 1) {
            std::array<int, 3> ijk{};
            ijk[axis] = ia;
            ijk[b] = ib;
            ijk[c] = ic;
            ++votes[lattice.index(ijk[0], ijk[1], ijk[2])];
          }
        }
      }
  }
  OccupancyGrid grid;
  grid.lattice = lattice;
  grid.values.resize(lattice.size());
  std::size_t disagree = 0;
  for (std::size_t n = 0; n < votes.size(); ++n) {
    grid.values[n] = votes[n] >= 2 ? 1.0 : 0.0;
    disagree += (votes[n] == 1 || votes[n] == 2) ? 1 : 0;
  }
  grid.watertight_warning = static_cast<double>(disagree) >
                            opt.disagreement_warning * votes.size();
  return grid;
}

inline OccupancyGrid voxelize(const Mesh& mesh, int resolution) {
  return voxelize(mesh, Lattice::unit_cube(resolution));
}

/// The 8 lattice nodes and weights blending a query point.
struct TrilinearStencil {
  std::array<std::size_t, 8> index{};
  std::array<double, 8> weight{};
  bool clamped = false;
};

/// Out-of-bounds points are clamped to the lattice box and flagged.
inline TrilinearStencil trilinear_stencil(const Lattice& lat, const Vec3& p) {
  TrilinearStencil s;
  std::array<int, 3> i0{};
  std::array<double, 3> t{};
  for (int d = 0; d < 3; ++d) {
    double u = (p[d] - lat.origin[d]) / lat.spacing;
    const double umax = lat.resolution - 1;
    if (!(u >= 0.0)) {
      u = 0.0;
      s.clamped = true;
    } else if (u > umax) {
      u = umax;
      s.clamped = true;
    }
    i0[d] = std::min(static_cast<int>(std::floor(u)), lat.resolution - 2);
    t[d] = u - i0[d];
  }
  int n = 0;
  for (int dx = 0; dx < 2; ++dx)
    for (int dy = 0; dy < 2; ++dy)
      for (int dz = 0; dz < 2; ++dz, ++n) {
        s.index[n] = lat.index(i0[0] + dx, i0[1] + dy, i0[2] + dz);
        s.weight[n] = (dx ? t[0] : 1.0 - t[0]) * (dy ? t[1] : 1.0 - t[1]) *
                      (dz ? t[2] : 1.0 - t[2]);
      }
  return s;
}

struct TrilinearResult {
  double value = 0.0;
  bool clamped = false;
};

/// Scalar trilinear interpolation over `values` laid out on `lat`.
inline TrilinearResult trilinear(const Lattice& lat,
                                 const std::vector<double>& values,
                                 const Vec3& p) {
  const auto s = trilinear_stencil(lat, p);
  TrilinearResult r;
  r.clamped = s.clamped;
  for (int n = 0; n < 8; ++n) r.value += s.weight[n] * values[s.index[n]];
  return r;
}

inline TrilinearResult trilinear(const OccupancyGrid& g, const Vec3& p) {
  return trilinear(g.lattice, g.values, p);
}

/// Vector-valued variant: `channels` is C x N with one column per node.
template <class Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> trilinear(
    const Lattice& lat, const Eigen::MatrixBase<Derived>& channels,
    const Vec3& p, bool* clamped = nullptr) {
  using S = typename Derived::Scalar;
  const auto s = trilinear_stencil(lat, p);
  if (clamped) *clamped = s.clamped;
  Eigen::Matrix<S, Eigen::Dynamic, 1> out =
      Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(channels.rows());
  for (int n = 0; n < 8; ++n)
    out += static_cast<S>(s.weight[n]) *
           channels.col(static_cast<Eigen::Index>(s.index[n]));
  return out;
}

/// |A and B| / |A or B| with values binarized at 0.5; 1 when both are empty.
inline double volumetric_iou(const OccupancyGrid& a, const OccupancyGrid& b) {
  require(a.lattice == b.lattice && a.values.size() == b.values.size(),
          "volumetric_iou: mismatched lattice");
  std::size_t inter = 0, uni = 0;
  for (std::size_t n = 0; n < a.values.size(); ++n) {
    const bool x = a.values[n] >= 0.5;
    const bool y = b.values[n] >= 0.5;
    inter += (x && y) ? 1 : 0;
    uni += (x || y) ? 1 : 0;
  }
  return uni == 0 ? 1.0
                  : static_cast<double>(inter) / static_cast<double>(uni);
}

/// "OCCGRID v1 R ox oy oz spacing\n" followed by R^3 bytes (0 or 1).
inline void write_occgrid(std::ostream& out, const OccupancyGrid& g) {
  std::ostringstream header;
  header.precision(17);
  header << "OCCGRID v1 " << g.lattice.resolution << ' ' << g.lattice.origin.x()
         << ' ' << g.lattice.origin.y() << ' ' << g.lattice.origin.z() << ' '
         << g.lattice.spacing << '\n';
  out << header.str();
  std::string bytes(g.values.size(), '\0');
  for (std::size_t n = 0; n < g.values.size(); ++n)
    bytes[n] = g.values[n] >= 0.5 ? '\1' : '\0';
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline OccupancyGrid read_occgrid(std::istream& in) {
  std::string header;
  require(static_cast<bool>(std::getline(in, header)), "occgrid: missing header");
  std::istringstream hs(header);
  std::string magic, version;
  OccupancyGrid g;
  hs >> magic >> version >> g.lattice.resolution >> g.lattice.origin.x() >>
      g.lattice.origin.y() >> g.lattice.origin.z() >> g.lattice.spacing;
  require(!hs.fail() && magic == "OCCGRID" && version == "v1",
          "occgrid: bad header");
  require(g.lattice.resolution >= 2 && g.lattice.spacing > 0.0,
          "occgrid: invalid lattice");
  std::string bytes(g.lattice.size(), '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<std::size_t>(in.gcount()) == bytes.size(),
          "occgrid: truncated payload");
  g.values.resize(bytes.size());
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    require(bytes[n] == '\0' || bytes[n] == '\1', "occgrid: byte not 0/1");
    g.values[n] = bytes[n] == '\1' ? 1.0 : 0.0;
  }
  return g;
}

inline void write_occgrid(const std::string& path, const OccupancyGrid& g) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write " + path);
  write_occgrid(out, g);
}

inline OccupancyGrid read_occgrid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open " + path);
  return read_occgrid(in);
}

}  // namespace skf
