#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "voxmorph/errors.hpp"
#include "voxmorph/geometry.hpp"

namespace voxmorph {

// 3D scalar intensity volume. Values are raw 8/16-bit counts right after
// loading and lie in [0, 1] after normalize().
struct VoxelGrid {
  Dims dims;
  Spacing spacing;
  std::vector<float> values; // size == dims.voxel_count(), x fastest

  VoxelGrid() = default;
  VoxelGrid(Dims d, Spacing s, float fill = 0.0f)
      : dims(d), spacing(s), values(d.voxel_count(), fill) {
    if (d.nx < 1 || d.ny < 1 || d.nz < 1)
      throw Error(ErrorKind::contract, "grid dimensions must be >= 1");
    if (!s.valid())
      throw Error(ErrorKind::contract, "voxel spacing must be positive");
  }

  float& at(int x, int y, int z) { return values[dims.index(x, y, z)]; }
  float at(int x, int y, int z) const { return values[dims.index(x, y, z)]; }
  bool empty() const { return values.empty(); }
};

struct StackMeta {
  std::string stack_id;
  int slice_count = 0;
  int bit_depth = 0; // 8 or 16
  std::string source_path;
};

// Per-voxel foreground flags with the source grid's dims and spacing.
struct BinaryVolume {
  Dims dims;
  Spacing spacing;
  std::vector<std::uint8_t> mask; // 0 or 1

  std::size_t foreground_count() const {
    std::size_t n = 0;
    for (auto v : mask) n += v;
    return n;
  }
};

// Instance labels: 0 = background, 1..K = cells; labels are contiguous.
struct LabelVolume {
  Dims dims;
  Spacing spacing;
  std::vector<std::uint32_t> labels;
  std::uint32_t k = 0; // number of instances

  std::uint32_t at(int x, int y, int z) const {
    return labels[dims.index(x, y, z)];
  }
};

// Linear rescale so min -> 0 and max -> 1; a constant grid maps to all-zero
// (background-dominant convention).
inline VoxelGrid normalize(const VoxelGrid& grid) {
  if (grid.empty())
    throw Error(ErrorKind::empty_input, "normalize: grid is empty");
  auto [mn_it, mx_it] = std::minmax_element(grid.values.begin(), grid.values.end());
  float mn = *mn_it, mx = *mx_it;
  VoxelGrid out = grid;
  if (mx == mn) {
    std::fill(out.values.begin(), out.values.end(), 0.0f);
    return out;
  }
  // single double-precision rounding per voxel keeps the map idempotent:
  // a second pass sees min 0 and max 1 and divides by exactly 1
  double lo = mn, range = static_cast<double>(mx) - lo;
  for (auto& v : out.values) v = static_cast<float>((v - lo) / range);
  return out;
}

} // namespace voxmorph
