#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "voxmorph/errors.hpp"
#include "voxmorph/geometry.hpp"
#include "voxmorph/random.hpp"
#include "voxmorph/voxel_grid.hpp"

namespace voxmorph {

// Ground truth for one synthetic cell. Topology expectations are present
// only where they are analytic (tubes and Y cells); compact blobs thin to a
// small digitization-dependent remnant, so they carry centroid truth only.
struct CellTruth {
  std::vector<Index3> mask;           // stamped voxels, raster order
  Vec3 centroid_um;                   // mean of mask voxel centers
  std::optional<int> expected_endpoints;
  std::optional<int> expected_branchpoints;
  std::optional<double> expected_skeleton_length_um; // band center; tests apply tolerance
};

struct PhantomTruth {
  std::vector<CellTruth> cells;
  double noise_sigma = 0;
  std::uint64_t seed = 0;
  Dims dims;
  Spacing spacing;
};

namespace detail {

// Distance from point p to segment [a, b].
inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  Vec3 ab = b - a;
  double len2 = ab.norm2();
  if (len2 == 0) return distance(p, a);
  double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

// Distance between segments [p1,q1] and [p2,q2] (Ericson, Real-Time
// Collision Detection, closest-point-of-two-segments).
inline double segment_segment_distance(const Vec3& p1, const Vec3& q1,
                                       const Vec3& p2, const Vec3& q2) {
  Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  double a = d1.norm2(), e = d2.norm2(), f = d2.dot(r);
  double s = 0, t = 0;
  constexpr double eps = 1e-12;
  if (a <= eps && e <= eps) {
    return distance(p1, p2);
  }
  if (a <= eps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    double c = d1.dot(r);
    if (e <= eps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      double b = d1.dot(d2);
      double denom = a * e - b * b;
      if (denom > eps)
        s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
      double tnom = b * s + f;
      if (tnom < 0) {
        t = 0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (tnom > e) {
        t = 1;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      } else {
        t = tnom / e;
      }
    }
  }
  return distance(p1 + d1 * s, p2 + d2 * t);
}

inline Vec3 mask_centroid(const std::vector<Index3>& mask, const Spacing& sp) {
  Vec3 sum{};
  for (const auto& v : mask) sum += voxel_center(v, sp);
  return sum / static_cast<double>(mask.size());
}

// Capsule (a segment dilated by `radius`): the hemispherical end caps give
// tubes a medial axis that is exactly the core segment, so the skeleton-length
// truth has clean geometry. A degenerate capsule with a == b is a solid ball.
struct CapsuleSpec {
  Vec3 a;
  Vec3 b;
  double radius = 0;
};

inline bool capsule_contains(const CapsuleSpec& c, const Vec3& p) {
  return point_segment_distance(p, c.a, c.b) <= c.radius;
}

inline void stamp_cells(VoxelGrid& grid, PhantomTruth& truth,
                        const std::vector<std::vector<CapsuleSpec>>& cells,
                        const std::vector<CellTruth>& prototypes) {
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    CellTruth cell = prototypes[ci];
    cell.mask.clear();
    for (int z = 0; z < grid.dims.nz; ++z)
      for (int y = 0; y < grid.dims.ny; ++y)
        for (int x = 0; x < grid.dims.nx; ++x) {
          Vec3 p = voxel_center({x, y, z}, grid.spacing);
          for (const auto& cap : cells[ci]) {
            if (capsule_contains(cap, p)) {
              cell.mask.push_back({x, y, z});
              grid.at(x, y, z) = 1.0f;
              break;
            }
          }
        }
    if (cell.mask.empty())
      throw Error(ErrorKind::resolution, "phantom cell produced no voxels");
    cell.centroid_um = mask_centroid(cell.mask, grid.spacing);
    truth.cells.push_back(std::move(cell));
  }
}

} // namespace detail

// Solid axis-aligned tube with hemispherical caps (a capsule), foreground 1.0
// on background 0.0. `length` is the full axial extent including the caps, so
// the medial segment runs from radius to length - radius and the
// skeleton-length truth is length - 2*radius (a band center: thinning eats
// the shrinking cap layers to within a voxel or two of the cap centers).
inline std::pair<VoxelGrid, PhantomTruth> make_tube(double length, double radius,
                                                    Spacing spacing, int axis = 0) {
  if (!spacing.valid())
    throw Error(ErrorKind::contract, "make_tube: spacing must be positive");
  if (radius < spacing.max_pitch())
    throw Error(ErrorKind::resolution,
                "make_tube: radius below voxel pitch cannot be resolved");
  if (length <= 2 * radius)
    throw Error(ErrorKind::contract, "make_tube: length must exceed 2*radius");

  double margin = radius + 2 * spacing.max_pitch();
  double ext[3] = {2 * (radius + margin), 2 * (radius + margin), 2 * (radius + margin)};
  ext[axis] = length + 2 * margin;
  Dims dims{static_cast<int>(std::ceil(ext[0] / spacing.sx)),
            static_cast<int>(std::ceil(ext[1] / spacing.sy)),
            static_cast<int>(std::ceil(ext[2] / spacing.sz))};
  VoxelGrid grid(dims, spacing, 0.0f);

  // Axis passes through the center voxel's center for clean digitization.
  Vec3 c = voxel_center({dims.nx / 2, dims.ny / 2, dims.nz / 2}, spacing);
  double half_core = length / 2 - radius;
  detail::CapsuleSpec cap;
  cap.radius = radius;
  cap.a = c;
  cap.b = c;
  (axis == 0 ? cap.a.x : axis == 1 ? cap.a.y : cap.a.z) -= half_core;
  (axis == 0 ? cap.b.x : axis == 1 ? cap.b.y : cap.b.z) += half_core;

  PhantomTruth truth;
  truth.dims = dims;
  truth.spacing = spacing;
  CellTruth proto;
  proto.expected_endpoints = 2;
  proto.expected_branchpoints = 0;
  proto.expected_skeleton_length_um = length - 2 * radius;
  detail::stamp_cells(grid, truth, {{cap}}, {proto});
  return {std::move(grid), std::move(truth)};
}

// Three capsule arms of full extent `arm_length` (hemispherical tips) joined
// at one junction, along +x, +y and +z. Topology truth: 3 endpoints, 1 branch
// point; skeleton-length truth 3*(arm_length - radius) counts each arm from
// the junction to within one cap radius of its tip.
inline std::pair<VoxelGrid, PhantomTruth> make_y_cell(double arm_length, double radius,
                                                      Spacing spacing) {
  if (!spacing.valid())
    throw Error(ErrorKind::contract, "make_y_cell: spacing must be positive");
  if (radius < spacing.max_pitch())
    throw Error(ErrorKind::resolution,
                "make_y_cell: radius below voxel pitch cannot be resolved");
  if (arm_length <= 2 * radius)
    throw Error(ErrorKind::contract, "make_y_cell: arm length must exceed 2*radius");

  double margin = radius + 2 * spacing.max_pitch();
  double lo = radius + margin;             // junction offset from the low corner
  double ext_hi = arm_length + margin;
  Dims dims{static_cast<int>(std::ceil((lo + ext_hi) / spacing.sx)),
            static_cast<int>(std::ceil((lo + ext_hi) / spacing.sy)),
            static_cast<int>(std::ceil((lo + ext_hi) / spacing.sz))};
  VoxelGrid grid(dims, spacing, 0.0f);

  int jx = static_cast<int>(lo / spacing.sx);
  int jy = static_cast<int>(lo / spacing.sy);
  int jz = static_cast<int>(lo / spacing.sz);
  Vec3 c = voxel_center({jx, jy, jz}, spacing);

  std::vector<detail::CapsuleSpec> arms(3);
  double core = arm_length - radius;  // cap hemisphere extends the tip to arm_length
  for (int a = 0; a < 3; ++a) {
    arms[a].radius = radius;
    arms[a].a = c;
    arms[a].b = c;
    (a == 0 ? arms[a].b.x : a == 1 ? arms[a].b.y : arms[a].b.z) += core;
  }

  PhantomTruth truth;
  truth.dims = dims;
  truth.spacing = spacing;
  CellTruth proto;
  proto.expected_endpoints = 3;
  proto.expected_branchpoints = 1;
  proto.expected_skeleton_length_um = 3 * arm_length - 3 * radius;
  detail::stamp_cells(grid, truth, {arms}, {proto});
  return {std::move(grid), std::move(truth)};
}

// Two Gaussian intensity blobs separated along x. With merged=true the
// separation must be < 3*sigma so thresholding yields one component.
inline std::pair<VoxelGrid, PhantomTruth> make_blob_pair(double separation, double sigma,
                                                         Spacing spacing, bool merged) {
  if (!spacing.valid())
    throw Error(ErrorKind::contract, "make_blob_pair: spacing must be positive");
  if (sigma < spacing.max_pitch())
    throw Error(ErrorKind::resolution,
                "make_blob_pair: sigma below voxel pitch cannot be resolved");
  if (merged && separation >= 3 * sigma)
    throw Error(ErrorKind::config,
                "make_blob_pair: merged pair requires separation < 3*sigma");
  if (!merged && separation < 3 * sigma)
    throw Error(ErrorKind::config,
                "make_blob_pair: separated pair requires separation >= 3*sigma");

  double margin = 4 * sigma + 2 * spacing.max_pitch();
  Dims dims{static_cast<int>(std::ceil((separation + 2 * margin) / spacing.sx)),
            static_cast<int>(std::ceil(2 * margin / spacing.sy)),
            static_cast<int>(std::ceil(2 * margin / spacing.sz))};
  VoxelGrid grid(dims, spacing, 0.0f);

  // Blob centers on voxel centers so digitized masks stay symmetric and the
  // mask centroid equals the generating center exactly.
  Vec3 mid = voxel_center({dims.nx / 2, dims.ny / 2, dims.nz / 2}, spacing);
  int half_sep_vox = static_cast<int>(std::round(separation / 2 / spacing.sx));
  Index3 i1{dims.nx / 2 - half_sep_vox, dims.ny / 2, dims.nz / 2};
  Index3 i2{dims.nx / 2 + half_sep_vox, dims.ny / 2, dims.nz / 2};
  Vec3 c1 = voxel_center(i1, spacing), c2 = voxel_center(i2, spacing);
  (void)mid;

  for (int z = 0; z < dims.nz; ++z)
    for (int y = 0; y < dims.ny; ++y)
      for (int x = 0; x < dims.nx; ++x) {
        Vec3 p = voxel_center({x, y, z}, spacing);
        double v = std::exp(-(p - c1).norm2() / (2 * sigma * sigma)) +
                   std::exp(-(p - c2).norm2() / (2 * sigma * sigma));
        grid.at(x, y, z) = static_cast<float>(std::min(1.0, v));
      }

  // Truth masks: disjoint symmetric balls around each center.
  double r_mask = std::min(3 * sigma, 0.45 * (c2 - c1).norm());
  PhantomTruth truth;
  truth.dims = dims;
  truth.spacing = spacing;
  for (const Vec3& c : {c1, c2}) {
    CellTruth cell; // centroid truth only: remnant topology is not analytic
    for (int z = 0; z < dims.nz; ++z)
      for (int y = 0; y < dims.ny; ++y)
        for (int x = 0; x < dims.nx; ++x)
          if (distance(voxel_center({x, y, z}, spacing), c) <= r_mask)
            cell.mask.push_back({x, y, z});
    cell.centroid_um = c; // symmetric digitization
    truth.cells.push_back(std::move(cell));
  }
  return {std::move(grid), std::move(truth)};
}

enum class CellKind { tube, y, blob };

struct SceneSpec {
  Dims dims{128, 128, 128};
  Spacing spacing{0.5, 0.5, 0.5};
  int k = 10;
  double min_gap_um = 5.0;
  CellKind kind = CellKind::tube;
  std::uint64_t seed = 1;
  double tube_length_um = 12.0;
  double radius_um = 1.0;   // tube/y radius, blob sigma
  double y_arm_um = 12.0;
  int max_attempts_per_cell = 500;
};

// k cells placed with pairwise surface gap >= min_gap, rejection-sampled
// deterministically from the seed. Throws a capacity error when the grid
// cannot host the requested scene.
inline std::pair<VoxelGrid, PhantomTruth> make_scene(const SceneSpec& spec) {
  if (!spec.spacing.valid() || spec.dims.nx < 1 || spec.dims.ny < 1 || spec.dims.nz < 1)
    throw Error(ErrorKind::contract, "make_scene: invalid dims or spacing");
  if (spec.k < 0) throw Error(ErrorKind::contract, "make_scene: k must be >= 0");
  if (spec.kind != CellKind::blob && spec.radius_um < spec.spacing.max_pitch())
    throw Error(ErrorKind::resolution,
                "make_scene: radius below voxel pitch cannot be resolved");

  VoxelGrid grid(spec.dims, spec.spacing, 0.0f);
  PhantomTruth truth;
  truth.dims = spec.dims;
  truth.spacing = spec.spacing;
  truth.seed = spec.seed;
  if (spec.k == 0) return {std::move(grid), std::move(truth)};

  Rng rng(mix_seed(spec.seed, 0x5ce9eULL));
  double reach = spec.kind == CellKind::blob ? 3 * spec.radius_um : spec.radius_um;

  struct Placed {
    std::vector<std::pair<Vec3, Vec3>> segments; // cell medial segments
  };
  std::vector<Placed> placed;
  std::vector<std::vector<detail::CapsuleSpec>> cells;
  std::vector<CellTruth> prototypes;

  double ext_x = spec.dims.nx * spec.spacing.sx;
  double ext_y = spec.dims.ny * spec.spacing.sy;
  double ext_z = spec.dims.nz * spec.spacing.sz;
  double wall = reach + 2 * spec.spacing.max_pitch();

  for (int ci = 0; ci < spec.k; ++ci) {
    bool ok = false;
    for (int attempt = 0; attempt < spec.max_attempts_per_cell && !ok; ++attempt) {
      Placed cand;
      std::vector<detail::CapsuleSpec> geom;
      CellTruth proto;
      if (spec.kind == CellKind::tube) {
        int axis = static_cast<int>(rng.uniform_index(3));
        double len = spec.tube_length_um;
        double lim[3] = {ext_x, ext_y, ext_z};
        double span[3];
        for (int a = 0; a < 3; ++a) span[a] = a == axis ? len : 0.0;
        Vec3 start{rng.uniform(wall, lim[0] - wall - span[0]),
                   rng.uniform(wall, lim[1] - wall - span[1]),
                   rng.uniform(wall, lim[2] - wall - span[2])};
        Vec3 end = start;
        (axis == 0 ? end.x : axis == 1 ? end.y : end.z) += len;
        // Gap checks use the full tip-to-tip extent; the stamped capsule core
        // is retracted by one radius per end so caps stay inside that extent.
        cand.segments.push_back({start, end});
        detail::CapsuleSpec cap;
        cap.radius = spec.radius_um;
        cap.a = start;
        cap.b = start;
        (axis == 0 ? cap.a.x : axis == 1 ? cap.a.y : cap.a.z) += spec.radius_um;
        (axis == 0 ? cap.b.x : axis == 1 ? cap.b.y : cap.b.z) += len - spec.radius_um;
        geom.push_back(cap);
        proto.expected_endpoints = 2;
        proto.expected_branchpoints = 0;
        proto.expected_skeleton_length_um = len - 2 * spec.radius_um;
      } else if (spec.kind == CellKind::y) {
        double arm = spec.y_arm_um;
        Vec3 c{rng.uniform(wall, ext_x - wall - arm),
               rng.uniform(wall, ext_y - wall - arm),
               rng.uniform(wall, ext_z - wall - arm)};
        for (int a = 0; a < 3; ++a) {
          Vec3 end = c;
          (a == 0 ? end.x : a == 1 ? end.y : end.z) += arm;
          cand.segments.push_back({c, end});
          detail::CapsuleSpec cap;
          cap.radius = spec.radius_um;
          cap.a = c;
          cap.b = c;
          (a == 0 ? cap.b.x : a == 1 ? cap.b.y : cap.b.z) += arm - spec.radius_um;
          geom.push_back(cap);
        }
        proto.expected_endpoints = 3;
        proto.expected_branchpoints = 1;
        proto.expected_skeleton_length_um = 3 * arm - 3 * spec.radius_um;
      } else { // blob: stamped as a solid ball of radius 2*sigma
        Vec3 c{rng.uniform(wall, ext_x - wall), rng.uniform(wall, ext_y - wall),
               rng.uniform(wall, ext_z - wall)};
        cand.segments.push_back({c, c});
        detail::CapsuleSpec cap; // degenerate segment = solid ball
        cap.a = c;
        cap.b = c;
        cap.radius = 2 * spec.radius_um;
        geom.push_back(cap); // centroid truth only for compact blobs
      }

      bool clear = true;
      for (const auto& other : placed) {
        for (const auto& s1 : cand.segments)
          for (const auto& s2 : other.segments) {
            double d = detail::segment_segment_distance(s1.first, s1.second,
                                                        s2.first, s2.second);
            if (d - 2 * reach < spec.min_gap_um) clear = false;
          }
        if (!clear) break;
      }
      if (!clear) continue;

      placed.push_back(std::move(cand));
      cells.push_back(std::move(geom));
      prototypes.push_back(proto);
      ok = true;
    }
    if (!ok)
      throw Error(ErrorKind::capacity,
                  "make_scene: could not place cell " + std::to_string(ci + 1) +
                      " of " + std::to_string(spec.k) + " with the requested gap");
  }

  detail::stamp_cells(grid, truth, cells, prototypes);
  return {std::move(grid), std::move(truth)};
}

// Adds clamped pseudo-Gaussian noise; sigma 0 returns the grid unchanged.
inline VoxelGrid add_noise(const VoxelGrid& grid, double sigma, std::uint64_t seed) {
  if (sigma < 0) throw Error(ErrorKind::contract, "add_noise: sigma must be >= 0");
  if (sigma == 0) return grid;
  VoxelGrid out = grid;
  Rng rng(mix_seed(seed, 0x4015eULL));
  for (auto& v : out.values) {
    double nv = v + sigma * rng.gaussian();
    v = static_cast<float>(std::clamp(nv, 0.0, 1.0));
  }
  return out;
}

} // namespace voxmorph
