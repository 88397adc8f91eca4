#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "voxmorph/errors.hpp"
#include "voxmorph/geometry.hpp"
#include "voxmorph/gmm.hpp"
#include "voxmorph/random.hpp"
#include "voxmorph/voxel_grid.hpp"

namespace voxmorph {

// 256-bin histogram of intensities in [0, 1]; values are clamped into range.
inline std::array<std::uint64_t, 256> intensity_histogram(const VoxelGrid& grid) {
  if (grid.empty())
    throw Error(ErrorKind::empty_input, "intensity_histogram: grid is empty");
  std::array<std::uint64_t, 256> hist{};
  for (float v : grid.values) {
    int bin = static_cast<int>(v * 256.0f);
    if (bin < 0) bin = 0;
    if (bin > 255) bin = 255;
    hist[bin]++;
  }
  return hist;
}

// Otsu's split on a 256-bin histogram: returns the bin t maximizing the
// between-class variance of {bins < t} vs {bins >= t}; ties break to the
// lowest bin. A single occupied bin has no valid split.
inline int otsu_from_histogram(const std::array<std::uint64_t, 256>& hist) {
  long double total_w = 0, total_m = 0;
  for (int b = 0; b < 256; ++b) {
    total_w += hist[b];
    total_m += static_cast<long double>(b) * hist[b];
  }
  long double w0 = 0, m0 = 0;
  long double best_var = -1;
  int best_t = -1;
  for (int t = 1; t < 256; ++t) {
    w0 += hist[t - 1];
    m0 += static_cast<long double>(t - 1) * hist[t - 1];
    long double w1 = total_w - w0;
    if (w0 == 0 || w1 == 0) continue;
    long double m1 = total_m - m0;
    long double diff = m0 / w0 - m1 / w1;
    long double var = w0 * w1 * diff * diff; // between-class variance, scaled by W^2
    if (var > best_var) {
      best_var = var;
      best_t = t;
    }
  }
  if (best_t < 0)
    throw Error(ErrorKind::degenerate_histogram,
                "otsu: histogram has a single occupied bin");
  return best_t;
}

// Intensity threshold for a normalized grid; binarize(grid, t) then yields
// foreground exactly on bins >= the selected Otsu bin.
inline double otsu_threshold(const VoxelGrid& grid) {
  return otsu_from_histogram(intensity_histogram(grid)) / 256.0;
}

inline BinaryVolume binarize(const VoxelGrid& grid, double threshold) {
  if (threshold < 0.0 || threshold > 1.0)
    throw Error(ErrorKind::contract, "binarize: threshold must be in [0, 1]");
  BinaryVolume out;
  out.dims = grid.dims;
  out.spacing = grid.spacing;
  out.mask.resize(grid.values.size());
  for (std::size_t i = 0; i < grid.values.size(); ++i)
    out.mask[i] = grid.values[i] >= threshold ? 1 : 0;
  return out;
}

// Flood-fill labeling; labels are assigned in raster-scan order of the first
// voxel encountered in each component, so the result is deterministic.
inline LabelVolume label_components(const BinaryVolume& binary, int connectivity = 26) {
  int n_offsets = detail::connectivity_offset_count(connectivity);
  const auto& offsets = detail::neighbor_offsets_by_rank();

  LabelVolume out;
  out.dims = binary.dims;
  out.spacing = binary.spacing;
  out.labels.assign(binary.mask.size(), 0);

  std::vector<Index3> stack;
  std::uint32_t next = 0;
  for (int z = 0; z < binary.dims.nz; ++z)
    for (int y = 0; y < binary.dims.ny; ++y)
      for (int x = 0; x < binary.dims.nx; ++x) {
        std::size_t idx = binary.dims.index(x, y, z);
        if (!binary.mask[idx] || out.labels[idx]) continue;
        ++next;
        out.labels[idx] = next;
        stack.push_back({x, y, z});
        while (!stack.empty()) {
          Index3 v = stack.back();
          stack.pop_back();
          for (int o = 0; o < n_offsets; ++o) {
            int nx = v.x + offsets[o].x, ny = v.y + offsets[o].y, nz = v.z + offsets[o].z;
            if (!binary.dims.contains(nx, ny, nz)) continue;
            std::size_t nidx = binary.dims.index(nx, ny, nz);
            if (binary.mask[nidx] && !out.labels[nidx]) {
              out.labels[nidx] = next;
              stack.push_back({nx, ny, nz});
            }
          }
        }
      }
  out.k = next;
  return out;
}

// Components below min_voxels become background; survivors are relabeled to
// a contiguous 1..K' range preserving raster order.
inline LabelVolume filter_small(const LabelVolume& labels, std::size_t min_voxels) {
  if (min_voxels < 1)
    throw Error(ErrorKind::contract, "filter_small: min_voxels must be >= 1");
  std::vector<std::size_t> counts(labels.k + 1, 0);
  for (auto l : labels.labels) counts[l]++;
  std::vector<std::uint32_t> remap(labels.k + 1, 0);
  std::uint32_t next = 0;
  for (std::uint32_t l = 1; l <= labels.k; ++l)
    if (counts[l] >= min_voxels) remap[l] = ++next;
  LabelVolume out;
  out.dims = labels.dims;
  out.spacing = labels.spacing;
  out.k = next;
  out.labels.resize(labels.labels.size());
  for (std::size_t i = 0; i < labels.labels.size(); ++i)
    out.labels[i] = remap[labels.labels[i]];
  return out;
}

struct SplitWarning {
  std::uint32_t label = 0;
  std::string message;
};

struct SplitResult {
  LabelVolume labels;
  std::vector<SplitWarning> warnings;
};

namespace detail {

// Relabel arbitrary nonzero ids to contiguous 1..K in raster first-encounter
// order, matching the label_components convention.
inline void relabel_raster_order(LabelVolume& vol) {
  std::vector<std::uint32_t> remap;
  std::uint32_t next = 0;
  for (auto& l : vol.labels) {
    if (l == 0) continue;
    if (l >= remap.size()) remap.resize(l + 1, 0);
    if (remap[l] == 0) remap[l] = ++next;
    l = remap[l];
  }
  vol.k = next;
}

} // namespace detail

// Splits every component whose physical volume exceeds max_volume by fitting
// Gaussian mixtures (k = 1..k_max) to the micron coordinates of its voxels
// and keeping the BIC-best model; voxels move to their maximum-responsibility
// component. Components at or under max_volume pass through unchanged. A fit
// that fails to converge leaves the component whole and records a warning.
inline SplitResult split_oversized(const LabelVolume& labels, double max_volume_um3,
                                   int k_max, std::uint64_t seed,
                                   const GmmOptions& opts = {}) {
  if (max_volume_um3 <= 0)
    throw Error(ErrorKind::contract, "split_oversized: max_volume must be > 0");
  if (k_max < 2)
    throw Error(ErrorKind::contract, "split_oversized: k_max must be >= 2");

  const double voxel_volume = labels.spacing.voxel_volume();
  std::vector<std::vector<Index3>> voxels(labels.k + 1);
  for (int z = 0; z < labels.dims.nz; ++z)
    for (int y = 0; y < labels.dims.ny; ++y)
      for (int x = 0; x < labels.dims.nx; ++x) {
        std::uint32_t l = labels.at(x, y, z);
        if (l) voxels[l].push_back({x, y, z});
      }

  SplitResult result;
  result.labels.dims = labels.dims;
  result.labels.spacing = labels.spacing;
  result.labels.labels.assign(labels.labels.size(), 0);

  std::uint32_t next_provisional = 0;
  for (std::uint32_t l = 1; l <= labels.k; ++l) {
    const auto& vox = voxels[l];
    double volume = static_cast<double>(vox.size()) * voxel_volume;
    int chosen_k = 1;
    GmmModel best;
    if (volume > max_volume_um3 && vox.size() >= 2) {
      std::vector<Vec3> pts;
      pts.reserve(vox.size());
      for (const auto& v : vox) pts.push_back(voxel_center(v, labels.spacing));

      // BIC selection over converged fits only; if every fit failed the
      // component stays whole and a warning records the fallback.
      double best_bic = 0;
      bool have = false;
      bool any_failed = false;
      int cap = std::min<std::size_t>(k_max, pts.size());
      for (int k = 1; k <= cap; ++k) {
        GmmModel m = fit_gmm(pts, k, mix_seed(seed, l), opts);
        if (!m.converged) {
          any_failed = true;
          continue;
        }
        double bic = gmm_bic(m, pts.size());
        if (!have || bic < best_bic) {
          have = true;
          best_bic = bic;
          best = m;
        }
      }
      if (have) {
        chosen_k = best.k;
      } else if (any_failed) {
        result.warnings.push_back(
            {l, "EM did not converge within the iteration cap; component kept whole"});
      }
    }

    if (chosen_k == 1) {
      ++next_provisional;
      for (const auto& v : vox)
        result.labels.labels[labels.dims.index(v.x, v.y, v.z)] = next_provisional;
    } else {
      std::uint32_t base = next_provisional;
      next_provisional += chosen_k;
      for (const auto& v : vox) {
        int j = gmm_assign(best, voxel_center(v, labels.spacing));
        result.labels.labels[labels.dims.index(v.x, v.y, v.z)] = base + 1 + j;
      }
    }
  }

  detail::relabel_raster_order(result.labels);
  return result;
}

} // namespace voxmorph
