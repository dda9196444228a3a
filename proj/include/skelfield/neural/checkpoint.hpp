// Binary parameter checkpoints.
//
//   "SKFW v1\n"
//   u32 tensor count
//   per tensor: u32 name length, name bytes, u32 rank (2), u64 dims[rank],
//               f64 values in row-major order
// All integers and floats little-endian.
#pragma once

#include "skelfield/neural/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <string>

namespace skf::nn {

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "checkpoint IO assumes a little-endian host");

template <class U>
void put(std::ostream& out, U v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(U));
}

template <class U>
U get(std::istream& in) {
  U v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(U));
  require(in.gcount() == static_cast<std::streamsize>(sizeof(U)), "checkpoint: truncated");
  return v;
}

}  // namespace detail

inline constexpr char kCheckpointMagic[] = "SKFW v1\n";

template <class T>
void write_checkpoint(std::ostream& out, const ParamStore<T>& params) {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(params.count()));
  for (std::size_t i = 0; i < params.count(); ++i) {
    const auto& p = params[static_cast<int>(i)];
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    detail::put<std::uint32_t>(out, 2);
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.rows()));
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(p.value.cols()));
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      for (Eigen::Index c = 0; c < p.value.cols(); ++c)
        detail::put<double>(out, static_cast<double>(p.value(r, c)));
  }
}

/// Loads tensors into an existing store; names and shapes must match.
template <class T>
void read_checkpoint(std::istream& in, ParamStore<T>& params) {
  char magic[sizeof(kCheckpointMagic) - 1];
  in.read(magic, sizeof(magic));
  require(in.gcount() == static_cast<std::streamsize>(sizeof(magic)) &&
              std::memcmp(magic, kCheckpointMagic, sizeof(magic)) == 0,
          "checkpoint: bad magic");
  const auto count = detail::get<std::uint32_t>(in);
  require(count == params.count(), "checkpoint: tensor count mismatch");
  for (std::uint32_t t = 0; t < count; ++t) {
    const auto len = detail::get<std::uint32_t>(in);
    require(len < (1u << 16), "checkpoint: implausible name length");
    std::string name(len, '\0');
    in.read(name.data(), len);
    const int idx = params.find(name);
    require(idx >= 0, "checkpoint: unknown tensor " + name);
    auto& p = params[idx];
    require(detail::get<std::uint32_t>(in) == 2, "checkpoint: expected rank 2");
    const auto rows = detail::get<std::uint64_t>(in);
    const auto cols = detail::get<std::uint64_t>(in);
    require(rows == static_cast<std::uint64_t>(p.value.rows()) &&
                cols == static_cast<std::uint64_t>(p.value.cols()),
            "checkpoint: shape mismatch for " + name);
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      for (Eigen::Index c = 0; c < p.value.cols(); ++c)
        p.value(r, c) = static_cast<T>(detail::get<double>(in));
  }
}

template <class T>
void write_checkpoint(const std::string& path, const ParamStore<T>& params) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write " + path);
  write_checkpoint(out, params);
}

template <class T>
void read_checkpoint(const std::string& path, ParamStore<T>& params) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open " + path);
  read_checkpoint(in, params);
}

}  // namespace skf::nn
