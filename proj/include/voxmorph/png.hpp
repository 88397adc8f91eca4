#pragma once

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <zlib.h>

#include "voxmorph/errors.hpp"
#include "voxmorph/io_util.hpp"

namespace voxmorph {

struct PngImage {
  int width = 0;
  int height = 0;
  int bit_depth = 8; // 8 or 16
  std::vector<std::uint16_t> pixels;
};

// Reads a non-interlaced grayscale PNG (color type 0, depth 8 or 16). Color,
// palette, alpha and interlaced files are rejected as format errors.
inline PngImage read_png_gray(const std::string& data) {
  static const unsigned char kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (data.size() < 8 || std::memcmp(data.data(), kSig, 8) != 0)
    throw Error(ErrorKind::format, "PNG: bad signature");

  auto u32 = [&](std::size_t off) {
    if (off + 4 > data.size())
      throw Error(ErrorKind::format, "PNG: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v = v << 8 | static_cast<std::uint8_t>(data[off + i]);
    return v;
  };

  PngImage img;
  bool have_ihdr = false;
  std::string compressed;
  std::size_t off = 8;
  while (off + 8 <= data.size()) {
    std::uint32_t len = u32(off);
    std::string type = data.substr(off + 4, 4);
    std::size_t payload = off + 8;
    if (payload + len + 4 > data.size())
      throw Error(ErrorKind::format, "PNG: truncated chunk " + type);
    if (type == "IHDR") {
      if (len != 13)
        throw Error(ErrorKind::format, "PNG: bad IHDR length");
      img.width = static_cast<int>(u32(payload));
      img.height = static_cast<int>(u32(payload + 4));
      int depth = static_cast<std::uint8_t>(data[payload + 8]);
      int color = static_cast<std::uint8_t>(data[payload + 9]);
      int interlace = static_cast<std::uint8_t>(data[payload + 12]);
      if (color != 0)
        throw Error(ErrorKind::format, "PNG: only grayscale (color type 0) supported");
      if (depth != 8 && depth != 16)
        throw Error(ErrorKind::format,
                    "PNG: unsupported bit depth " + std::to_string(depth));
      if (interlace != 0)
        throw Error(ErrorKind::format, "PNG: interlaced files not supported");
      if (img.width <= 0 || img.height <= 0)
        throw Error(ErrorKind::format, "PNG: bad dimensions");
      img.bit_depth = depth;
      have_ihdr = true;
    } else if (type == "IDAT") {
      compressed.append(data, payload, len);
    } else if (type == "IEND") {
      break;
    }
    off = payload + len + 4; // skip CRC
  }
  if (!have_ihdr)
    throw Error(ErrorKind::format, "PNG: missing IHDR");
  if (compressed.empty())
    throw Error(ErrorKind::format, "PNG: missing IDAT");

  const int bpp = img.bit_depth / 8;
  const std::size_t stride = static_cast<std::size_t>(img.width) * bpp;
  const std::size_t raw_size = (stride + 1) * img.height;
  std::vector<std::uint8_t> raw(raw_size);
  uLongf out_len = raw_size;
  int rc = uncompress(raw.data(), &out_len,
                      reinterpret_cast<const Bytef*>(compressed.data()),
                      static_cast<uLong>(compressed.size()));
  if (rc != Z_OK || out_len != raw_size)
    throw Error(ErrorKind::format, "PNG: corrupt compressed data");

  // undo per-row filters (0 none, 1 sub, 2 up, 3 average, 4 paeth)
  std::vector<std::uint8_t> prev(stride, 0), cur(stride);
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    const std::uint8_t* src = raw.data() + static_cast<std::size_t>(y) * (stride + 1);
    std::uint8_t filter = src[0];
    const std::uint8_t* line = src + 1;
    for (std::size_t i = 0; i < stride; ++i) {
      int a = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0; // left
      int b = prev[i];                                               // up
      int c = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0; // up-left
      int x = line[i];
      int v;
      switch (filter) {
        case 0: v = x; break;
        case 1: v = x + a; break;
        case 2: v = x + b; break;
        case 3: v = x + (a + b) / 2; break;
        case 4: {
          int p = a + b - c;
          int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
          int pred = pa <= pb && pa <= pc ? a : pb <= pc ? b : c;
          v = x + pred;
          break;
        }
        default:
          throw Error(ErrorKind::format,
                      "PNG: bad filter type " + std::to_string(filter));
      }
      cur[i] = static_cast<std::uint8_t>(v & 0xff);
    }
    for (int x = 0; x < img.width; ++x) {
      std::uint16_t s = bpp == 1
                            ? cur[x]
                            : static_cast<std::uint16_t>(cur[2 * x] << 8 | cur[2 * x + 1]);
      img.pixels[static_cast<std::size_t>(y) * img.width + x] = s;
    }
    std::swap(prev, cur);
  }
  return img;
}

inline PngImage read_png_gray_file(const std::filesystem::path& path) {
  return read_png_gray(read_file(path));
}

} // namespace voxmorph
