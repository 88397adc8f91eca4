#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <tuple>
#include <vector>

#include "voxmorph/errors.hpp"
#include "voxmorph/geometry.hpp"
#include "voxmorph/voxel_grid.hpp"

namespace voxmorph {

// One cell's voxel set in global grid coordinates.
struct CellMask {
  std::uint32_t label = 0;
  std::vector<Index3> voxels;
  Dims dims;
  Spacing spacing;
};

struct Skeleton {
  std::uint32_t label = 0;
  std::vector<Index3> voxels; // raster order, subset of the cell mask
  Dims dims;
  Spacing spacing;
};

namespace detail {

// Cell index inside the 3x3x3 neighborhood cube: (dx+1) + 3(dy+1) + 9(dz+1).
constexpr int kCenterCell = 13;

struct NeighborhoodTables {
  // 26-adjacency between cube cells (center excluded from adjacency lists).
  std::array<std::array<int, 26>, 27> adj26{};
  std::array<int, 27> adj26_count{};
  // 6-adjacency restricted to the 18-neighborhood cells.
  std::array<std::array<int, 6>, 27> adj6{};
  std::array<int, 27> adj6_count{};
  std::array<bool, 27> in_n18{};
  std::array<bool, 27> is_face{};
};

inline const NeighborhoodTables& neighborhood_tables() {
  static const NeighborhoodTables t = [] {
    NeighborhoodTables t{};
    auto coord = [](int c) {
      return Index3{c % 3 - 1, (c / 3) % 3 - 1, c / 9 - 1};
    };
    for (int c = 0; c < 27; ++c) {
      Index3 a = coord(c);
      int manhattan = std::abs(a.x) + std::abs(a.y) + std::abs(a.z);
      t.in_n18[c] = c != kCenterCell && manhattan <= 2;
      t.is_face[c] = manhattan == 1;
      for (int d = 0; d < 27; ++d) {
        if (c == d || c == kCenterCell || d == kCenterCell) continue;
        Index3 b = coord(d);
        int ddx = std::abs(a.x - b.x), ddy = std::abs(a.y - b.y), ddz = std::abs(a.z - b.z);
        if (ddx <= 1 && ddy <= 1 && ddz <= 1)
          t.adj26[c][t.adj26_count[c]++] = d;
        bool d_in_n18 = std::abs(b.x) + std::abs(b.y) + std::abs(b.z) <= 2;
        if (ddx + ddy + ddz == 1 && t.in_n18[c] && d_in_n18)
          t.adj6[c][t.adj6_count[c]++] = d;
      }
    }
    return t;
  }();
  return t;
}

// Simple-point test for (26, 6) digital topology: deleting the center must
// keep exactly one 26-component of foreground in N26 and exactly one
// 6-component of background in N18 that touches a face neighbor.
inline bool is_simple_point(const std::array<std::uint8_t, 27>& nb) {
  const auto& t = neighborhood_tables();

  // T26: 26-components of foreground among the 26 neighbors.
  std::array<std::uint8_t, 27> seen{};
  int fg_components = 0;
  std::array<int, 27> stack;
  for (int c = 0; c < 27; ++c) {
    if (c == kCenterCell || !nb[c] || seen[c]) continue;
    if (++fg_components > 1) return false;
    int top = 0;
    stack[top++] = c;
    seen[c] = 1;
    while (top) {
      int u = stack[--top];
      for (int i = 0; i < t.adj26_count[u]; ++i) {
        int v = t.adj26[u][i];
        if (nb[v] && !seen[v]) {
          seen[v] = 1;
          stack[top++] = v;
        }
      }
    }
  }
  if (fg_components != 1) return false;

  // T6: 6-components of background within N18 that contain a face neighbor.
  seen.fill(0);
  int bg_components = 0;
  for (int c = 0; c < 27; ++c) {
    if (!t.is_face[c] || nb[c] || seen[c]) continue; // seed only from face cells
    if (++bg_components > 1) return false;
    int top = 0;
    stack[top++] = c;
    seen[c] = 1;
    while (top) {
      int u = stack[--top];
      for (int i = 0; i < t.adj6_count[u]; ++i) {
        int v = t.adj6[u][i];
        if (!nb[v] && !seen[v]) {
          seen[v] = 1;
          stack[top++] = v;
        }
      }
    }
  }
  return bg_components == 1;
}

// Padded working buffer for one cell: mask cropped to its bounding box with
// a one-voxel background border.
struct CropBuffer {
  Dims dims;     // padded dims
  Index3 origin; // global coordinate of padded-buffer voxel (1,1,1) - (1,1,1)
  std::vector<std::uint8_t> data;

  std::size_t index(int x, int y, int z) const { return dims.index(x, y, z); }
};

inline CropBuffer make_crop(const std::vector<Index3>& voxels) {
  Index3 lo{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(),
            std::numeric_limits<int>::max()};
  Index3 hi{std::numeric_limits<int>::min(), std::numeric_limits<int>::min(),
            std::numeric_limits<int>::min()};
  for (const auto& v : voxels) {
    lo.x = std::min(lo.x, v.x); hi.x = std::max(hi.x, v.x);
    lo.y = std::min(lo.y, v.y); hi.y = std::max(hi.y, v.y);
    lo.z = std::min(lo.z, v.z); hi.z = std::max(hi.z, v.z);
  }
  CropBuffer buf;
  buf.dims = Dims{hi.x - lo.x + 3, hi.y - lo.y + 3, hi.z - lo.z + 3};
  buf.origin = Index3{lo.x - 1, lo.y - 1, lo.z - 1};
  buf.data.assign(buf.dims.voxel_count(), 0);
  for (const auto& v : voxels)
    buf.data[buf.index(v.x - lo.x + 1, v.y - lo.y + 1, v.z - lo.z + 1)] = 1;
  return buf;
}

inline void gather_neighborhood(const CropBuffer& buf, int x, int y, int z,
                                std::array<std::uint8_t, 27>& nb) {
  int c = 0;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        nb[c++] = buf.data[buf.index(x + dx, y + dy, z + dz)];
}

inline int neighbor_count_26(const std::array<std::uint8_t, 27>& nb) {
  int n = 0;
  for (int c = 0; c < 27; ++c)
    if (c != kCenterCell && nb[c]) ++n;
  return n;
}

} // namespace detail

// Iterative boundary-peeling curve thinning. Per sub-iteration (6 fixed face
// directions) border voxels that are simple and not curve endpoints are
// deleted sequentially in raster order, re-checking at deletion time so each
// removal individually preserves (26, 6) topology. Terminates when a full
// round deletes nothing.
inline Skeleton skeletonize(const CellMask& mask) {
  if (mask.voxels.empty())
    throw Error(ErrorKind::empty_input, "skeletonize: empty mask");
  if (!mask.spacing.valid())
    throw Error(ErrorKind::contract, "skeletonize: invalid spacing");

  detail::CropBuffer buf = detail::make_crop(mask.voxels);

  // The contract requires a 26-connected mask.
  {
    std::vector<std::size_t> stack;
    std::vector<std::uint8_t> seen(buf.data.size(), 0);
    std::size_t first = buf.index(mask.voxels[0].x - buf.origin.x,
                                  mask.voxels[0].y - buf.origin.y,
                                  mask.voxels[0].z - buf.origin.z);
    stack.push_back(first);
    seen[first] = 1;
    std::size_t reached = 0;
    const std::ptrdiff_t sx = 1, sy = buf.dims.nx,
                         sz = static_cast<std::ptrdiff_t>(buf.dims.nx) * buf.dims.ny;
    while (!stack.empty()) {
      std::size_t u = stack.back();
      stack.pop_back();
      ++reached;
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (!dx && !dy && !dz) continue;
            std::size_t v = u + dx * sx + dy * sy + dz * sz;
            if (buf.data[v] && !seen[v]) {
              seen[v] = 1;
              stack.push_back(v);
            }
          }
    }
    if (reached != mask.voxels.size())
      throw Error(ErrorKind::contract, "skeletonize: mask is not 26-connected");
  }

  // Peeling order is direction-sensitive, so thin in a canonical axis frame:
  // of the six axis orderings, pick the one minimizing (extents, spacing,
  // occupancy bytes). Any axis permutation of the input (with spacing
  // permuted accordingly) lands on the same canonical volume, making the
  // result independent of how the caller's axes are laid out.
  static constexpr std::array<std::array<int, 3>, 6> kAxisOrders{
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  const std::array<int, 3> lo{buf.origin.x + 1, buf.origin.y + 1, buf.origin.z + 1};
  const std::array<int, 3> ext{buf.dims.nx - 3, buf.dims.ny - 3, buf.dims.nz - 3};
  const std::array<double, 3> sp{mask.spacing.sx, mask.spacing.sy, mask.spacing.sz};
  auto coord = [](const Index3& v, int axis) {
    return axis == 0 ? v.x : axis == 1 ? v.y : v.z;
  };

  std::array<int, 3> order = kAxisOrders[0];
  Dims cdims;
  std::vector<std::uint8_t> cdata;
  bool have = false;
  for (const auto& o : kAxisOrders) {
    std::array<int, 3> oext{ext[o[0]], ext[o[1]], ext[o[2]]};
    std::array<double, 3> osp{sp[o[0]], sp[o[1]], sp[o[2]]};
    std::array<int, 3> bext{ext[order[0]], ext[order[1]], ext[order[2]]};
    std::array<double, 3> bsp{sp[order[0]], sp[order[1]], sp[order[2]]};
    if (have && std::tie(oext, osp) > std::tie(bext, bsp)) continue;
    Dims d{oext[0] + 3, oext[1] + 3, oext[2] + 3};
    std::vector<std::uint8_t> data(d.voxel_count(), 0);
    for (const auto& v : mask.voxels)
      data[d.index(coord(v, o[0]) - lo[o[0]] + 1, coord(v, o[1]) - lo[o[1]] + 1,
                   coord(v, o[2]) - lo[o[2]] + 1)] = 1;
    if (!have || std::tie(oext, osp) < std::tie(bext, bsp) || data < cdata) {
      order = o;
      cdims = d;
      cdata = std::move(data);
      have = true;
    }
  }
  detail::CropBuffer canon{cdims, Index3{0, 0, 0}, std::move(cdata)};

  static constexpr std::array<Index3, 6> kDirections{
      Index3{0, 0, -1}, Index3{0, 0, 1},  Index3{0, -1, 0},
      Index3{0, 1, 0},  Index3{-1, 0, 0}, Index3{1, 0, 0}};

  std::array<std::uint8_t, 27> nb;
  std::vector<Index3> candidates;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& dir : kDirections) {
      candidates.clear();
      for (int z = 1; z < canon.dims.nz - 1; ++z)
        for (int y = 1; y < canon.dims.ny - 1; ++y)
          for (int x = 1; x < canon.dims.nx - 1; ++x) {
            if (!canon.data[canon.index(x, y, z)]) continue;
            if (canon.data[canon.index(x + dir.x, y + dir.y, z + dir.z)]) continue;
            detail::gather_neighborhood(canon, x, y, z, nb);
            if (detail::neighbor_count_26(nb) == 1) continue; // curve endpoint
            if (detail::is_simple_point(nb)) candidates.push_back({x, y, z});
          }
      for (const auto& v : candidates) {
        detail::gather_neighborhood(canon, v.x, v.y, v.z, nb);
        if (detail::neighbor_count_26(nb) == 1) continue;
        if (!detail::is_simple_point(nb)) continue;
        canon.data[canon.index(v.x, v.y, v.z)] = 0;
        changed = true;
      }
    }
  }

  std::array<int, 3> inv{};
  for (int i = 0; i < 3; ++i) inv[order[i]] = i;

  Skeleton skel;
  skel.label = mask.label;
  skel.dims = mask.dims;
  skel.spacing = mask.spacing;
  for (int z = 1; z < canon.dims.nz - 1; ++z)
    for (int y = 1; y < canon.dims.ny - 1; ++y)
      for (int x = 1; x < canon.dims.nx - 1; ++x)
        if (canon.data[canon.index(x, y, z)]) {
          std::array<int, 3> c{x, y, z};
          skel.voxels.push_back({c[inv[0]] - 1 + lo[0], c[inv[1]] - 1 + lo[1],
                                 c[inv[2]] - 1 + lo[2]});
        }
  std::sort(skel.voxels.begin(), skel.voxels.end(), [](const Index3& a, const Index3& b) {
    if (a.z != b.z) return a.z < b.z;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });
  return skel;
}

} // namespace voxmorph
