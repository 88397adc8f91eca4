#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "voxmorph/errors.hpp"
#include "voxmorph/io_util.hpp"

namespace voxmorph {

// Decoded grayscale stack; samples widened to uint16 regardless of depth.
struct TiffStack {
  int width = 0;
  int height = 0;
  int bit_depth = 8; // 8 or 16
  std::vector<std::vector<std::uint16_t>> pages;
};

namespace tiffdetail {

struct Reader {
  const std::string& buf;
  bool big_endian = false;

  std::uint16_t u16(std::size_t off) const {
    if (off + 2 > buf.size()) throw Error(ErrorKind::format, "TIFF: truncated file");
    auto b0 = static_cast<std::uint8_t>(buf[off]);
    auto b1 = static_cast<std::uint8_t>(buf[off + 1]);
    return big_endian ? static_cast<std::uint16_t>(b0 << 8 | b1)
                      : static_cast<std::uint16_t>(b1 << 8 | b0);
  }
  std::uint32_t u32(std::size_t off) const {
    if (off + 4 > buf.size()) throw Error(ErrorKind::format, "TIFF: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      auto b = static_cast<std::uint8_t>(buf[off + (big_endian ? i : 3 - i)]);
      v = v << 8 | b;
    }
    return v;
  }
};

struct Entry {
  std::uint16_t tag = 0;
  std::uint16_t type = 0;
  std::uint32_t count = 0;
  std::size_t value_off = 0; // offset of the inline value field
};

inline std::uint32_t entry_scalar(const Reader& r, const Entry& e, std::uint32_t idx = 0) {
  // SHORT(3) or LONG(4) values, possibly stored out of line
  std::size_t elem = e.type == 3 ? 2 : 4;
  if (e.type != 3 && e.type != 4)
    throw Error(ErrorKind::format, "TIFF: unexpected type for tag " + std::to_string(e.tag));
  std::size_t base = e.value_off;
  if (elem * e.count > 4) base = r.u32(e.value_off);
  std::size_t off = base + elem * idx;
  return e.type == 3 ? r.u16(off) : r.u32(off);
}

inline void put16(std::string& s, std::uint16_t v) {
  s += static_cast<char>(v & 0xff);
  s += static_cast<char>(v >> 8);
}
inline void put32(std::string& s, std::uint32_t v) {
  s += static_cast<char>(v & 0xff);
  s += static_cast<char>(v >> 8 & 0xff);
  s += static_cast<char>(v >> 16 & 0xff);
  s += static_cast<char>(v >> 24 & 0xff);
}

struct TagValue {
  std::uint16_t tag;
  std::uint16_t type;
  std::uint32_t count;
  std::uint32_t value; // inline value or offset (caller resolves)
};

} // namespace tiffdetail

// Reads a baseline uncompressed grayscale TIFF (8/16-bit, II or MM, strip
// layout, one sample per pixel). Anything fancier is rejected as a format
// error rather than silently misread.
inline TiffStack read_tiff_gray(const std::string& data) {
  using namespace tiffdetail;
  if (data.size() < 8)
    throw Error(ErrorKind::format, "TIFF: file too small");
  Reader r{data, false};
  if (data[0] == 'I' && data[1] == 'I') r.big_endian = false;
  else if (data[0] == 'M' && data[1] == 'M') r.big_endian = true;
  else throw Error(ErrorKind::format, "TIFF: bad byte-order mark");
  if (r.u16(2) != 42)
    throw Error(ErrorKind::format, "TIFF: bad magic");

  TiffStack stack;
  std::uint32_t ifd_off = r.u32(4);
  int page = 0;
  while (ifd_off != 0) {
    std::uint16_t n_entries = r.u16(ifd_off);
    std::uint32_t width = 0, height = 0, bits = 1, compression = 1, photometric = 1,
                  samples = 1, rows_per_strip = 0xffffffffu, planar = 1;
    Entry strip_offsets{}, strip_counts{};
    bool have_so = false, have_sc = false;
    for (std::uint16_t i = 0; i < n_entries; ++i) {
      std::size_t e_off = ifd_off + 2 + 12ull * i;
      Entry e{r.u16(e_off), r.u16(e_off + 2), r.u32(e_off + 4), e_off + 8};
      switch (e.tag) {
        case 256: width = entry_scalar(r, e); break;
        case 257: height = entry_scalar(r, e); break;
        case 258: bits = entry_scalar(r, e); break;
        case 259: compression = entry_scalar(r, e); break;
        case 262: photometric = entry_scalar(r, e); break;
        case 273: strip_offsets = e; have_so = true; break;
        case 277: samples = entry_scalar(r, e); break;
        case 278: rows_per_strip = entry_scalar(r, e); break;
        case 279: strip_counts = e; have_sc = true; break;
        case 284: planar = entry_scalar(r, e); break;
        default: break; // unknown tags ignored
      }
    }
    if (width == 0 || height == 0 || !have_so || !have_sc)
      throw Error(ErrorKind::format, "TIFF: page " + std::to_string(page) +
                                         " missing required tags");
    if (compression != 1)
      throw Error(ErrorKind::format, "TIFF: only uncompressed data supported");
    if (photometric != 0 && photometric != 1)
      throw Error(ErrorKind::format, "TIFF: only grayscale supported");
    if (samples != 1 || planar != 1)
      throw Error(ErrorKind::format, "TIFF: only single-sample pixels supported");
    if (bits != 8 && bits != 16)
      throw Error(ErrorKind::format, "TIFF: unsupported bit depth " + std::to_string(bits));

    if (page == 0) {
      stack.width = static_cast<int>(width);
      stack.height = static_cast<int>(height);
      stack.bit_depth = static_cast<int>(bits);
    } else if (static_cast<int>(width) != stack.width ||
               static_cast<int>(height) != stack.height) {
      throw Error(ErrorKind::dimension_mismatch,
                  "TIFF: page " + std::to_string(page) + " is " + std::to_string(width) +
                      "x" + std::to_string(height) + ", expected " +
                      std::to_string(stack.width) + "x" + std::to_string(stack.height));
    } else if (static_cast<int>(bits) != stack.bit_depth) {
      throw Error(ErrorKind::dimension_mismatch,
                  "TIFF: page " + std::to_string(page) + " bit depth differs");
    }

    std::vector<std::uint16_t> pixels(static_cast<std::size_t>(width) * height);
    std::size_t bytes_per_row = static_cast<std::size_t>(width) * (bits / 8);
    std::uint32_t n_strips = strip_offsets.count;
    if (strip_counts.count != n_strips)
      throw Error(ErrorKind::format, "TIFF: strip tag count mismatch");
    std::size_t row = 0;
    for (std::uint32_t s = 0; s < n_strips; ++s) {
      std::size_t off = entry_scalar(r, strip_offsets, s);
      std::size_t len = entry_scalar(r, strip_counts, s);
      if (off + len > data.size())
        throw Error(ErrorKind::format, "TIFF: strip beyond end of file");
      std::size_t rows_here = std::min<std::size_t>(rows_per_strip, height - row);
      if (len != rows_here * bytes_per_row)
        throw Error(ErrorKind::format, "TIFF: strip byte count mismatch");
      for (std::size_t rr = 0; rr < rows_here; ++rr, ++row) {
        std::size_t src = off + rr * bytes_per_row;
        std::size_t dst = row * width;
        if (bits == 8) {
          for (std::uint32_t x = 0; x < width; ++x)
            pixels[dst + x] = static_cast<std::uint8_t>(data[src + x]);
        } else {
          for (std::uint32_t x = 0; x < width; ++x)
            pixels[dst + x] = r.u16(src + 2ull * x);
        }
      }
    }
    if (row != height)
      throw Error(ErrorKind::format, "TIFF: strips cover " + std::to_string(row) +
                                         " rows of " + std::to_string(height));
    if (photometric == 0) { // min-is-white
      std::uint16_t maxv = bits == 8 ? 255 : 65535;
      for (auto& p : pixels) p = maxv - p;
    }
    stack.pages.push_back(std::move(pixels));
    ifd_off = r.u32(ifd_off + 2 + 12ull * n_entries);
    ++page;
  }
  if (stack.pages.empty())
    throw Error(ErrorKind::empty_input, "TIFF: no pages");
  return stack;
}

inline TiffStack read_tiff_gray_file(const std::filesystem::path& path) {
  return read_tiff_gray(read_file(path));
}

// Serializes a grayscale stack as little-endian baseline TIFF, one strip per
// page; optional description text rides on the first page.
inline std::string encode_tiff_gray(const TiffStack& stack,
                                    const std::string& description = "") {
  using namespace tiffdetail;
  if (stack.pages.empty())
    throw Error(ErrorKind::empty_input, "TIFF write: no pages");
  if (stack.bit_depth != 8 && stack.bit_depth != 16)
    throw Error(ErrorKind::contract, "TIFF write: bit depth must be 8 or 16");
  const std::size_t wh = static_cast<std::size_t>(stack.width) * stack.height;
  for (const auto& p : stack.pages)
    if (p.size() != wh)
      throw Error(ErrorKind::contract, "TIFF write: page size mismatch");

  std::string out;
  out += "II";
  put16(out, 42);
  put32(out, 0); // patched to first IFD offset below

  std::size_t prev_next_ifd_field = 4;
  for (std::size_t page = 0; page < stack.pages.size(); ++page) {
    const auto& pixels = stack.pages[page];
    // pixel strip
    std::size_t strip_off = out.size();
    std::size_t strip_len = wh * (stack.bit_depth / 8);
    if (stack.bit_depth == 8) {
      for (std::uint16_t v : pixels) out += static_cast<char>(v & 0xff);
    } else {
      for (std::uint16_t v : pixels) {
        out += static_cast<char>(v & 0xff);
        out += static_cast<char>(v >> 8);
      }
    }
    if (out.size() % 2) out += '\0'; // word-align the IFD

    std::string desc;
    if (page == 0 && !description.empty()) {
      desc = description;
      desc += '\0';
    }
    std::size_t desc_off = 0;
    if (desc.size() > 4) {
      desc_off = out.size();
      out += desc;
      if (out.size() % 2) out += '\0';
    }

    std::vector<TagValue> tags;
    tags.push_back({256, 4, 1, static_cast<std::uint32_t>(stack.width)});
    tags.push_back({257, 4, 1, static_cast<std::uint32_t>(stack.height)});
    tags.push_back({258, 3, 1, static_cast<std::uint32_t>(stack.bit_depth)});
    tags.push_back({259, 3, 1, 1});
    tags.push_back({262, 3, 1, 1});
    if (!desc.empty()) {
      std::uint32_t v = 0;
      if (desc.size() <= 4) {
        for (std::size_t i = 0; i < desc.size(); ++i)
          v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(desc[i])) << (8 * i);
      } else {
        v = static_cast<std::uint32_t>(desc_off);
      }
      tags.push_back({270, 2, static_cast<std::uint32_t>(desc.size()), v});
    }
    tags.push_back({273, 4, 1, static_cast<std::uint32_t>(strip_off)});
    tags.push_back({277, 3, 1, 1});
    tags.push_back({278, 4, 1, static_cast<std::uint32_t>(stack.height)});
    tags.push_back({279, 4, 1, static_cast<std::uint32_t>(strip_len)});
    // tags must be sorted by id
    std::sort(tags.begin(), tags.end(),
              [](const TagValue& a, const TagValue& b) { return a.tag < b.tag; });

    std::size_t ifd_off = out.size();
    // patch the previous chain pointer
    std::string patched;
    put32(patched, static_cast<std::uint32_t>(ifd_off));
    std::memcpy(out.data() + prev_next_ifd_field, patched.data(), 4);

    put16(out, static_cast<std::uint16_t>(tags.size()));
    for (const auto& t : tags) {
      put16(out, t.tag);
      put16(out, t.type);
      put32(out, t.count);
      put32(out, t.value);
    }
    prev_next_ifd_field = out.size();
    put32(out, 0); // next-IFD pointer, patched by the following page
  }
  return out;
}

inline void write_tiff_gray_file(const std::filesystem::path& path, const TiffStack& stack,
                                 const std::string& description = "") {
  write_file_atomic(path, encode_tiff_gray(stack, description));
}

} // namespace voxmorph
