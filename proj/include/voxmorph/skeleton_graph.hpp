#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "voxmorph/errors.hpp"
#include "voxmorph/geometry.hpp"
#include "voxmorph/skeleton.hpp"

namespace voxmorph {

enum class NodeKind { endpoint, junction, isolated };

struct SkeletonNode {
  Index3 voxel;  // junction nodes: raster-first voxel of the merged cluster
  NodeKind kind = NodeKind::endpoint;
};

struct SkeletonBranch {
  std::vector<Index3> polyline; // consecutive 26-adjacent voxels
  double length_um = 0.0;       // sum of per-step anisotropic Euclidean lengths
  int from_node = -1;           // -1 only for node-free cycles
  int to_node = -1;
};

struct SkeletonGraph {
  std::uint32_t label = 0;
  Spacing spacing;
  std::vector<SkeletonNode> nodes;
  std::vector<SkeletonBranch> branches;
};

struct BranchMetrics {
  int n_endpoints = 0;
  int n_branchpoints = 0; // junction clusters, each counted once
  int n_isolated = 0;
  int n_branches = 0;
  double total_length_um = 0.0;
  // Absent when there are no branches.
  std::optional<double> avg_length_um;
  std::optional<double> max_length_um;
  std::optional<double> min_length_um;
};

namespace detail {

inline double step_length(const Index3& a, const Index3& b, const Spacing& s) {
  double dx = (a.x - b.x) * s.sx;
  double dy = (a.y - b.y) * s.sy;
  double dz = (a.z - b.z) * s.sz;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double polyline_length(const std::vector<Index3>& poly, const Spacing& s) {
  double len = 0.0;
  for (std::size_t i = 1; i < poly.size(); ++i)
    len += step_length(poly[i - 1], poly[i], s);
  return len;
}

} // namespace detail

// Builds the topology graph of a thinned skeleton. Voxels are classified by
// their 26-neighbor count (1 endpoint, 2 slab, >=3 junction, 0 isolated);
// 26-adjacent junction voxels merge into one node anchored at the cluster's
// raster-first voxel. Branches are maximal slab chains between node voxels
// (or direct node-node adjacencies); a slab cycle touching no node voxel is
// emitted as a closed branch with no node attachment.
inline SkeletonGraph build_graph(const Skeleton& skel) {
  SkeletonGraph g;
  g.label = skel.label;
  g.spacing = skel.spacing;
  if (skel.voxels.empty()) return g;

  detail::CropBuffer buf = detail::make_crop(skel.voxels);
  const std::size_t n = buf.data.size();

  auto local = [&](const Index3& v) {
    return Index3{v.x - buf.origin.x, v.y - buf.origin.y, v.z - buf.origin.z};
  };
  auto global = [&](std::size_t i) {
    int x = static_cast<int>(i % buf.dims.nx);
    int y = static_cast<int>((i / buf.dims.nx) % buf.dims.ny);
    int z = static_cast<int>(i / (static_cast<std::size_t>(buf.dims.nx) * buf.dims.ny));
    return Index3{x + buf.origin.x, y + buf.origin.y, z + buf.origin.z};
  };

  const std::ptrdiff_t sx = 1, sy = buf.dims.nx,
                       sz = static_cast<std::ptrdiff_t>(buf.dims.nx) * buf.dims.ny;
  std::array<std::ptrdiff_t, 26> offs;
  {
    int c = 0;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!dx && !dy && !dz) continue;
          offs[c++] = dx * sx + dy * sy + dz * sz;
        }
  }

  // Raster-ordered list of skeleton voxel linear indices.
  std::vector<std::size_t> raster;
  raster.reserve(skel.voxels.size());
  for (const auto& v : skel.voxels) {
    Index3 l = local(v);
    raster.push_back(buf.index(l.x, l.y, l.z));
  }
  std::sort(raster.begin(), raster.end());

  // degree-by-neighbor-count classification
  constexpr std::uint8_t kSlab = 0, kEndpoint = 1, kJunction = 2, kIsolated = 3;
  std::vector<std::uint8_t> kind(n, kSlab);
  std::vector<int> degree(n, 0);
  for (std::size_t i : raster) {
    int d = 0;
    for (auto o : offs)
      if (buf.data[i + o]) ++d;
    degree[i] = d;
    kind[i] = d == 0 ? kIsolated : d == 1 ? kEndpoint : d == 2 ? kSlab : kJunction;
  }

  // node assignment; junction clusters merged via 26-connected flood fill
  std::vector<int> node_of(n, -1);
  for (std::size_t i : raster) {
    if (node_of[i] >= 0 || kind[i] == kSlab) continue;
    int id = static_cast<int>(g.nodes.size());
    if (kind[i] == kJunction) {
      std::vector<std::size_t> stack{i};
      node_of[i] = id;
      while (!stack.empty()) {
        std::size_t u = stack.back();
        stack.pop_back();
        for (auto o : offs) {
          std::size_t v = u + o;
          if (buf.data[v] && kind[v] == kJunction && node_of[v] < 0) {
            node_of[v] = id;
            stack.push_back(v);
          }
        }
      }
      g.nodes.push_back({global(i), NodeKind::junction});
    } else {
      node_of[i] = id;
      g.nodes.push_back({global(i),
                         kind[i] == kEndpoint ? NodeKind::endpoint : NodeKind::isolated});
    }
  }

  // branch tracing from node voxels, raster order, fixed neighbor order
  std::vector<std::uint8_t> slab_used(n, 0);
  for (std::size_t i : raster) {
    if (kind[i] == kSlab || kind[i] == kIsolated) continue;
    for (auto o : offs) {
      std::size_t w = i + o;
      if (!buf.data[w]) continue;
      if (kind[w] != kSlab) {
        // direct node-node adjacency; intra-cluster contacts are not branches
        if (node_of[w] == node_of[i]) continue;
        if (w < i) continue; // emitted when scanning the smaller endpoint
        SkeletonBranch b;
        b.polyline = {global(i), global(w)};
        b.from_node = node_of[i];
        b.to_node = node_of[w];
        b.length_um = detail::polyline_length(b.polyline, g.spacing);
        g.branches.push_back(std::move(b));
        continue;
      }
      if (slab_used[w]) continue;
      SkeletonBranch b;
      b.polyline.push_back(global(i));
      std::size_t prev = i, cur = w;
      while (true) {
        b.polyline.push_back(global(cur));
        if (kind[cur] != kSlab) break;
        slab_used[cur] = 1;
        std::size_t next = cur; // sentinel
        for (auto o2 : offs) {
          std::size_t v = cur + o2;
          if (buf.data[v] && v != prev) {
            next = v;
            break;
          }
        }
        if (next == cur)
          throw Error(ErrorKind::contract, "skeleton graph: broken slab chain");
        prev = cur;
        cur = next;
      }
      b.from_node = node_of[i];
      b.to_node = node_of[cur];
      b.length_um = detail::polyline_length(b.polyline, g.spacing);
      g.branches.push_back(std::move(b));
    }
  }

  // node-free slab cycles: every remaining unused slab voxel lies on one
  for (std::size_t i : raster) {
    if (kind[i] != kSlab || slab_used[i]) continue;
    SkeletonBranch b;
    b.polyline.push_back(global(i));
    slab_used[i] = 1;
    std::size_t prev = i, cur = 0;
    bool found = false;
    for (auto o : offs) {
      std::size_t v = i + o;
      if (buf.data[v]) {
        cur = v;
        found = true;
        break;
      }
    }
    if (!found)
      throw Error(ErrorKind::contract, "skeleton graph: slab voxel without neighbors");
    while (cur != i) {
      b.polyline.push_back(global(cur));
      slab_used[cur] = 1;
      std::size_t next = cur;
      for (auto o : offs) {
        std::size_t v = cur + o;
        if (buf.data[v] && v != prev) {
          next = v;
          break;
        }
      }
      if (next == cur)
        throw Error(ErrorKind::contract, "skeleton graph: broken slab cycle");
      prev = cur;
      cur = next;
    }
    b.polyline.push_back(global(i)); // close the loop
    b.length_um = detail::polyline_length(b.polyline, g.spacing);
    g.branches.push_back(std::move(b));
  }

  return g;
}

inline BranchMetrics branch_metrics(const SkeletonGraph& g) {
  BranchMetrics m;
  for (const auto& node : g.nodes) {
    switch (node.kind) {
      case NodeKind::endpoint: ++m.n_endpoints; break;
      case NodeKind::junction: ++m.n_branchpoints; break;
      case NodeKind::isolated: ++m.n_isolated; break;
    }
  }
  m.n_branches = static_cast<int>(g.branches.size());
  if (m.n_branches == 0) return m;
  double mn = g.branches[0].length_um, mx = mn;
  for (const auto& b : g.branches) {
    m.total_length_um += b.length_um;
    mn = std::min(mn, b.length_um);
    mx = std::max(mx, b.length_um);
  }
  m.avg_length_um = m.total_length_um / m.n_branches;
  m.min_length_um = mn;
  m.max_length_um = mx;
  return m;
}

} // namespace voxmorph
