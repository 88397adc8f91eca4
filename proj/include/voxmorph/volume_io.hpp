#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "voxmorph/errors.hpp"
#include "voxmorph/png.hpp"
#include "voxmorph/tiff.hpp"
#include "voxmorph/voxel_grid.hpp"

namespace voxmorph {

namespace iodetail {

inline std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

struct SliceBatch {
  int width = 0, height = 0, bit_depth = 0;
  std::vector<std::vector<std::uint16_t>> slices;
};

// Appends one file's slices, enforcing uniform dims/depth across the stack.
inline void append_file(SliceBatch& batch, const std::filesystem::path& file) {
  std::string ext = lower_ext(file);
  std::vector<std::vector<std::uint16_t>> pages;
  int w = 0, h = 0, depth = 0;
  if (ext == ".tif" || ext == ".tiff") {
    TiffStack t = read_tiff_gray_file(file);
    w = t.width; h = t.height; depth = t.bit_depth;
    pages = std::move(t.pages);
  } else if (ext == ".png") {
    PngImage p = read_png_gray_file(file);
    w = p.width; h = p.height; depth = p.bit_depth;
    pages.push_back(std::move(p.pixels));
  } else {
    throw Error(ErrorKind::format, "unsupported image type: " + file.string());
  }
  if (batch.slices.empty()) {
    batch.width = w; batch.height = h; batch.bit_depth = depth;
  } else if (w != batch.width || h != batch.height) {
    throw Error(ErrorKind::dimension_mismatch,
                "slice " + file.filename().string() + " is " + std::to_string(w) + "x" +
                    std::to_string(h) + ", expected " + std::to_string(batch.width) +
                    "x" + std::to_string(batch.height));
  } else if (depth != batch.bit_depth) {
    throw Error(ErrorKind::dimension_mismatch,
                "slice " + file.filename().string() + " bit depth " +
                    std::to_string(depth) + " differs from " +
                    std::to_string(batch.bit_depth));
  }
  for (auto& p : pages) batch.slices.push_back(std::move(p));
}

} // namespace iodetail

// Loads a z-stack from a multi-page TIFF, a single PNG, or a directory of
// per-slice TIFF/PNG files ordered lexicographically by filename. Raw sample
// values are preserved (cast to float); spacing always comes from the caller.
inline std::pair<VoxelGrid, StackMeta> load_stack(const std::filesystem::path& path,
                                                  const Spacing& spacing) {
  if (!spacing.valid())
    throw Error(ErrorKind::config, "voxel spacing must be positive on all axes");

  iodetail::SliceBatch batch;
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = iodetail::lower_ext(entry.path());
      if (ext == ".tif" || ext == ".tiff" || ext == ".png")
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) {
                return a.filename().string() < b.filename().string();
              });
    if (files.empty())
      throw Error(ErrorKind::empty_input, "no image slices in directory: " + path.string());
    for (const auto& f : files) iodetail::append_file(batch, f);
  } else if (std::filesystem::exists(path, ec)) {
    iodetail::append_file(batch, path);
  } else {
    throw Error(ErrorKind::not_found, "input not found: " + path.string());
  }

  VoxelGrid grid(Dims{batch.width, batch.height, static_cast<int>(batch.slices.size())},
                 spacing);
  std::size_t per_slice = static_cast<std::size_t>(batch.width) * batch.height;
  for (std::size_t z = 0; z < batch.slices.size(); ++z)
    for (std::size_t i = 0; i < per_slice; ++i)
      grid.values[z * per_slice + i] = static_cast<float>(batch.slices[z][i]);

  StackMeta meta;
  meta.stack_id = path.stem().string();
  meta.slice_count = static_cast<int>(batch.slices.size());
  meta.bit_depth = batch.bit_depth;
  meta.source_path = path.string();
  return {std::move(grid), meta};
}

// Writes the grid as a little-endian multi-page grayscale TIFF. Values are
// rounded to the nearest sample and clamped to the target depth, so grids
// holding raw integer samples round-trip exactly.
inline void write_stack(const VoxelGrid& grid, const std::filesystem::path& path,
                        int bit_depth, const std::string& description = "") {
  TiffStack stack;
  stack.width = grid.dims.nx;
  stack.height = grid.dims.ny;
  stack.bit_depth = bit_depth;
  const double maxv = bit_depth == 8 ? 255.0 : 65535.0;
  std::size_t per_slice = static_cast<std::size_t>(grid.dims.nx) * grid.dims.ny;
  for (int z = 0; z < grid.dims.nz; ++z) {
    std::vector<std::uint16_t> page(per_slice);
    for (std::size_t i = 0; i < per_slice; ++i) {
      double v = std::llround(std::clamp(static_cast<double>(grid.values[z * per_slice + i]),
                                         0.0, maxv));
      page[i] = static_cast<std::uint16_t>(v);
    }
    stack.pages.push_back(std::move(page));
  }
  write_tiff_gray_file(path, stack, description);
}

// Label volumes travel as 16-bit TIFF stacks with raw label values.
inline void write_label_stack(const LabelVolume& labels, const std::filesystem::path& path,
                              const std::string& description = "") {
  if (labels.k > 65535)
    throw Error(ErrorKind::capacity, "cannot store more than 65535 labels in 16-bit TIFF");
  TiffStack stack;
  stack.width = labels.dims.nx;
  stack.height = labels.dims.ny;
  stack.bit_depth = 16;
  std::size_t per_slice = static_cast<std::size_t>(labels.dims.nx) * labels.dims.ny;
  for (int z = 0; z < labels.dims.nz; ++z) {
    std::vector<std::uint16_t> page(per_slice);
    for (std::size_t i = 0; i < per_slice; ++i)
      page[i] = static_cast<std::uint16_t>(labels.labels[z * per_slice + i]);
    stack.pages.push_back(std::move(page));
  }
  write_tiff_gray_file(path, stack, description);
}

inline LabelVolume read_label_stack(const std::filesystem::path& path,
                                    const Spacing& spacing) {
  if (!spacing.valid())
    throw Error(ErrorKind::config, "voxel spacing must be positive on all axes");
  TiffStack t = read_tiff_gray_file(path);
  LabelVolume labels;
  labels.dims = Dims{t.width, t.height, static_cast<int>(t.pages.size())};
  labels.spacing = spacing;
  labels.labels.resize(labels.dims.voxel_count());
  std::size_t per_slice = static_cast<std::size_t>(t.width) * t.height;
  std::uint32_t maxl = 0;
  for (std::size_t z = 0; z < t.pages.size(); ++z)
    for (std::size_t i = 0; i < per_slice; ++i) {
      std::uint32_t l = t.pages[z][i];
      labels.labels[z * per_slice + i] = l;
      maxl = std::max(maxl, l);
    }
  labels.k = maxl;
  return labels;
}

} // namespace voxmorph
