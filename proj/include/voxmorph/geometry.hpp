#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

#include "voxmorph/errors.hpp"

namespace voxmorph {

struct Dims {
  int nx = 0, ny = 0, nz = 0;

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  bool contains(int x, int y, int z) const {
    return x >= 0 && x < nx && y >= 0 && y < ny && z >= 0 && z < nz;
  }
  // Linear index with x fastest; raster-scan order means increasing index.
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(nx) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(ny) * static_cast<std::size_t>(z));
  }
  bool operator==(const Dims&) const = default;
};

// Physical voxel pitch in microns per axis.
struct Spacing {
  double sx = 1.0, sy = 1.0, sz = 1.0;

  double voxel_volume() const { return sx * sy * sz; }
  double max_pitch() const { return std::max(sx, std::max(sy, sz)); }
  double min_pitch() const { return std::min(sx, std::min(sy, sz)); }
  bool valid() const { return sx > 0 && sy > 0 && sz > 0; }
  bool operator==(const Spacing&) const = default;
};

struct Index3 {
  int x = 0, y = 0, z = 0;
  bool operator==(const Index3&) const = default;
};

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x; y += o.y; z += o.z;
    return *this;
  }
  Vec3& operator-=(const Vec3& o) {
    x -= o.x; y -= o.y; z -= o.z;
    return *this;
  }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm2() const { return dot(*this); }
  double norm() const { return std::sqrt(norm2()); }
  bool operator==(const Vec3&) const = default;
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// Center of voxel (i,j,k): (index + 0.5) * spacing on each axis.
inline Vec3 voxel_center(const Index3& v, const Spacing& s) {
  return {(v.x + 0.5) * s.sx, (v.y + 0.5) * s.sy, (v.z + 0.5) * s.sz};
}

namespace detail {

// Neighbor offsets for 6/18/26 connectivity, in a fixed deterministic order.
inline const std::array<Index3, 26>& neighbor_offsets_26() {
  static const std::array<Index3, 26> offs = [] {
    std::array<Index3, 26> a{};
    int n = 0;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          a[n++] = Index3{dx, dy, dz};
        }
    return a;
  }();
  return offs;
}

inline int connectivity_offset_count(int connectivity) {
  switch (connectivity) {
    case 6: return 6;
    case 18: return 18;
    case 26: return 26;
    default:
      throw Error(ErrorKind::contract,
                  "connectivity must be 6, 18 or 26, got " +
                      std::to_string(connectivity));
  }
}

// First 6 entries are face neighbors, next 12 edge, last 8 corner; a prefix
// of length 6/18/26 realizes the requested connectivity.
inline const std::array<Index3, 26>& neighbor_offsets_by_rank() {
  static const std::array<Index3, 26> offs = [] {
    std::array<Index3, 26> a{};
    int n = 0;
    for (int manhattan = 1; manhattan <= 3; ++manhattan)
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (std::abs(dx) + std::abs(dy) + std::abs(dz) != manhattan) continue;
            a[n++] = Index3{dx, dy, dz};
          }
    return a;
  }();
  return offs;
}

} // namespace detail

} // namespace voxmorph
