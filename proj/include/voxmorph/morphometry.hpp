#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "voxmorph/convex_hull.hpp"
#include "voxmorph/errors.hpp"
#include "voxmorph/geometry.hpp"
#include "voxmorph/io_util.hpp"
#include "voxmorph/skeleton.hpp"
#include "voxmorph/skeleton_graph.hpp"
#include "voxmorph/voxel_grid.hpp"

namespace voxmorph {

// One output-table row. Branch length statistics are absent (not zero) for
// cells whose skeleton has no branches.
struct CellMorphology {
  std::uint32_t cell_id = 0;
  Vec3 centroid_um{};
  double cell_volume_um3 = 0.0;
  double territory_volume_um3 = 0.0;
  double ramification_index = 0.0;
  int n_endpoints = 0;
  int n_branchpoints = 0;
  std::optional<double> branch_len_avg_um;
  std::optional<double> branch_len_max_um;
  std::optional<double> branch_len_min_um;
};

inline constexpr const char* kMorphTableHeader =
    "cell_id,centroid_x_um,centroid_y_um,centroid_z_um,cell_volume_um3,"
    "territory_volume_um3,ramification_index,n_endpoints,n_branchpoints,"
    "branch_len_avg_um,branch_len_max_um,branch_len_min_um";

inline Vec3 centroid(const std::vector<Index3>& mask, const Spacing& spacing) {
  if (mask.empty())
    throw Error(ErrorKind::empty_input, "centroid: empty mask");
  Vec3 sum{};
  for (const auto& v : mask) sum += voxel_center(v, spacing);
  return sum * (1.0 / static_cast<double>(mask.size()));
}

inline double cell_volume(const std::vector<Index3>& mask, const Spacing& spacing) {
  if (mask.empty())
    throw Error(ErrorKind::empty_input, "cell_volume: empty mask");
  return static_cast<double>(mask.size()) * spacing.voxel_volume();
}

// Convex hull volume of the mask's voxel centers. Interior voxels (all six
// face neighbors present) cannot be hull vertices — each is a convex
// combination of same-row boundary voxels — so only boundary centers feed
// the hull. Affinely degenerate center sets fall back to cell_volume.
inline double territory_volume(const std::vector<Index3>& mask, const Spacing& spacing) {
  if (mask.empty())
    throw Error(ErrorKind::empty_input, "territory_volume: empty mask");
  detail::CropBuffer buf = detail::make_crop(mask);
  std::vector<Vec3> pts;
  for (const auto& v : mask) {
    int x = v.x - buf.origin.x, y = v.y - buf.origin.y, z = v.z - buf.origin.z;
    bool interior = buf.data[buf.index(x - 1, y, z)] && buf.data[buf.index(x + 1, y, z)] &&
                    buf.data[buf.index(x, y - 1, z)] && buf.data[buf.index(x, y + 1, z)] &&
                    buf.data[buf.index(x, y, z - 1)] && buf.data[buf.index(x, y, z + 1)];
    if (!interior) pts.push_back(voxel_center(v, spacing));
  }
  HullResult hull = convex_hull_volume(pts);
  if (hull.degenerate) return cell_volume(mask, spacing);
  return hull.volume;
}

inline double ramification_index(double cell_volume_um3, double territory_volume_um3) {
  if (cell_volume_um3 <= 0.0)
    throw Error(ErrorKind::contract, "ramification_index: cell volume must be positive");
  return territory_volume_um3 / cell_volume_um3;
}

struct CellError {
  std::uint32_t label = 0;
  std::string message;
};

struct CellAnalysis {
  std::vector<CellMorphology> rows;  // ordered by label
  std::vector<CellError> errors;     // cells that failed, without aborting the rest
};

inline CellAnalysis analyze_cells(const LabelVolume& labels) {
  CellAnalysis out;
  if (labels.k == 0) return out;

  std::vector<std::vector<Index3>> cells(labels.k);
  for (int z = 0; z < labels.dims.nz; ++z)
    for (int y = 0; y < labels.dims.ny; ++y)
      for (int x = 0; x < labels.dims.nx; ++x) {
        std::uint32_t l = labels.labels[labels.dims.index(x, y, z)];
        if (l == 0) continue;
        if (l > labels.k)
          throw Error(ErrorKind::contract, "analyze_cells: label exceeds instance count");
        cells[l - 1].push_back({x, y, z});
      }

  for (std::uint32_t l = 1; l <= labels.k; ++l) {
    const auto& voxels = cells[l - 1];
    try {
      if (voxels.empty())
        throw Error(ErrorKind::empty_input, "label has no voxels");
      CellMorphology row;
      row.cell_id = l;
      row.centroid_um = centroid(voxels, labels.spacing);
      row.cell_volume_um3 = cell_volume(voxels, labels.spacing);
      row.territory_volume_um3 = territory_volume(voxels, labels.spacing);
      row.ramification_index =
          ramification_index(row.cell_volume_um3, row.territory_volume_um3);

      CellMask mask{l, voxels, labels.dims, labels.spacing};
      SkeletonGraph graph = build_graph(skeletonize(mask));
      BranchMetrics metrics = branch_metrics(graph);
      row.n_endpoints = metrics.n_endpoints;
      row.n_branchpoints = metrics.n_branchpoints;
      row.branch_len_avg_um = metrics.avg_length_um;
      row.branch_len_max_um = metrics.max_length_um;
      row.branch_len_min_um = metrics.min_length_um;
      out.rows.push_back(std::move(row));
    } catch (const Error& e) {
      out.errors.push_back({l, e.what()});
    }
  }
  return out;
}

inline std::string to_morph_csv(const std::vector<CellMorphology>& rows) {
  std::string s = kMorphTableHeader;
  s += '\n';
  auto opt = [](const std::optional<double>& v) {
    return v ? format_number(*v) : std::string{};
  };
  for (const auto& r : rows) {
    s += std::to_string(r.cell_id);
    s += ',';
    s += format_number(r.centroid_um.x); s += ',';
    s += format_number(r.centroid_um.y); s += ',';
    s += format_number(r.centroid_um.z); s += ',';
    s += format_number(r.cell_volume_um3); s += ',';
    s += format_number(r.territory_volume_um3); s += ',';
    s += format_number(r.ramification_index); s += ',';
    s += std::to_string(r.n_endpoints); s += ',';
    s += std::to_string(r.n_branchpoints); s += ',';
    s += opt(r.branch_len_avg_um); s += ',';
    s += opt(r.branch_len_max_um); s += ',';
    s += opt(r.branch_len_min_um);
    s += '\n';
  }
  return s;
}

inline void write_morph_table(const std::vector<CellMorphology>& rows,
                              const std::filesystem::path& path) {
  write_file_atomic(path, to_morph_csv(rows));
}

} // namespace voxmorph
