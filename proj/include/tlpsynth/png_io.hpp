#pragma once

// Minimal PNG container for 8-bit RGB images, built directly on zlib.
//
// The writer always emits the same bytes for the same image: filter None on
// every scanline, one IDAT chunk, pinned deflate level, no ancillary chunks.
// The reader accepts any standards-conforming 8-bit truecolor PNG (all five
// filter types, split IDAT) and rejects everything else: other color types,
// other bit depths, interlacing, non-square dimensions.

#include <zlib.h>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "tlpsynth/image.hpp"

namespace tlpsynth {

namespace png_detail {

constexpr int kDeflateLevel = 6;
constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
constexpr int kMaxSide = 1 << 15;

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
         (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                         const std::uint8_t* data, std::size_t len) {
  put_be32(out, static_cast<std::uint32_t>(len));
  const std::size_t type_pos = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data, data + len);
  uLong crc = crc32(0L, out.data() + type_pos, static_cast<uInt>(4 + len));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

inline std::uint8_t paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a);
  const int pb = std::abs(p - b);
  const int pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
  if (pb <= pc) return static_cast<std::uint8_t>(b);
  return static_cast<std::uint8_t>(c);
}

inline std::vector<std::uint8_t> inflate_exact(const std::uint8_t* data,
                                               std::size_t size,
                                               std::size_t expected) {
  std::vector<std::uint8_t> out(expected);
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw Error("zlib inflateInit failed");
  zs.next_in = const_cast<Bytef*>(data);
  zs.avail_in = static_cast<uInt>(size);
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(expected);
  const int rc = inflate(&zs, Z_FINISH);
  const uLong total = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || total != expected) {
    throw Error("PNG image data does not decompress to the expected size");
  }
  return out;
}

}  // namespace png_detail

inline std::vector<std::uint8_t> encode_png(const TraceImage& img) {
  namespace pd = png_detail;
  const int w = img.width();
  if (w < 1) throw Error("cannot encode an empty image");
  const std::size_t stride = 1 + 3 * static_cast<std::size_t>(w);

  std::vector<std::uint8_t> raw;
  raw.reserve(stride * w);
  for (int row = 0; row < w; ++row) {
    raw.push_back(0);  // filter None
    for (int col = 0; col < w; ++col) {
      const Rgb& p = img(row, col);
      raw.push_back(p.r);
      raw.push_back(p.g);
      raw.push_back(p.b);
    }
  }

  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> idat(bound);
  if (compress2(idat.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                pd::kDeflateLevel) != Z_OK) {
    throw Error("zlib compression failed");
  }
  idat.resize(bound);

  std::vector<std::uint8_t> out;
  out.insert(out.end(), pd::kSignature, pd::kSignature + 8);
  std::vector<std::uint8_t> ihdr;
  pd::put_be32(ihdr, static_cast<std::uint32_t>(w));
  pd::put_be32(ihdr, static_cast<std::uint32_t>(w));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace
  pd::append_chunk(out, "IHDR", ihdr.data(), ihdr.size());
  pd::append_chunk(out, "IDAT", idat.data(), idat.size());
  pd::append_chunk(out, "IEND", nullptr, 0);
  return out;
}

inline TraceImage decode_png(std::span<const std::uint8_t> bytes) {
  namespace pd = png_detail;
  if (bytes.size() < 8 || !std::equal(pd::kSignature, pd::kSignature + 8, bytes.data())) {
    throw Error("not a PNG file");
  }

  std::size_t pos = 8;
  bool seen_ihdr = false;
  bool seen_iend = false;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> idat;

  while (pos < bytes.size() && !seen_iend) {
    if (bytes.size() - pos < 12) throw Error("truncated PNG chunk");
    const std::uint32_t len = pd::read_be32(&bytes[pos]);
    if (bytes.size() - pos - 12 < len) throw Error("truncated PNG chunk");
    const std::uint8_t* type = &bytes[pos + 4];
    const std::uint8_t* data = &bytes[pos + 8];
    const std::uint32_t stored_crc = pd::read_be32(data + len);
    const uLong crc = crc32(0L, type, static_cast<uInt>(4 + len));
    if (static_cast<std::uint32_t>(crc) != stored_crc) throw Error("PNG chunk CRC mismatch");
    const std::string name(reinterpret_cast<const char*>(type), 4);

    if (!seen_ihdr) {
      if (name != "IHDR" || len != 13) throw Error("PNG missing IHDR");
      width = pd::read_be32(data);
      height = pd::read_be32(data + 4);
      const std::uint8_t bit_depth = data[8];
      const std::uint8_t color_type = data[9];
      const std::uint8_t interlace = data[12];
      if (width == 0 || height == 0 || width > pd::kMaxSide || height > pd::kMaxSide) {
        throw Error("PNG dimensions out of range");
      }
      if (bit_depth != 8) throw Error("unsupported PNG bit depth (need 8)");
      if (color_type != 2) throw Error("unsupported PNG color type (need 8-bit RGB, no alpha)");
      if (data[10] != 0 || data[11] != 0) throw Error("unsupported PNG compression/filter method");
      if (interlace != 0) throw Error("interlaced PNG not supported");
      if (width != height) {
        throw Error("PNG is " + std::to_string(width) + "x" + std::to_string(height) +
                    ", expected a square image");
      }
      seen_ihdr = true;
    } else if (name == "IDAT") {
      idat.insert(idat.end(), data, data + len);
    } else if (name == "IEND") {
      seen_iend = true;
    }
    // Ancillary chunks are skipped.
    pos += 12 + len;
  }
  if (!seen_ihdr || !seen_iend) throw Error("incomplete PNG stream");
  if (idat.empty()) throw Error("PNG has no image data");

  const std::size_t w = width;
  const std::size_t stride = 3 * w;
  auto raw = pd::inflate_exact(idat.data(), idat.size(), (stride + 1) * w);

  TraceImage img(static_cast<int>(w));
  std::vector<std::uint8_t> prev(stride, 0);
  std::vector<std::uint8_t> cur(stride, 0);
  for (std::size_t row = 0; row < w; ++row) {
    const std::uint8_t* line = raw.data() + row * (stride + 1);
    const std::uint8_t filter = line[0];
    const std::uint8_t* src = line + 1;
    for (std::size_t i = 0; i < stride; ++i) {
      const int x = src[i];
      const int a = i >= 3 ? cur[i - 3] : 0;    // left
      const int b = prev[i];                    // up
      const int c = i >= 3 ? prev[i - 3] : 0;   // up-left
      int value = 0;
      switch (filter) {
        case 0: value = x; break;
        case 1: value = x + a; break;
        case 2: value = x + b; break;
        case 3: value = x + (a + b) / 2; break;
        case 4: value = x + pd::paeth(a, b, c); break;
        default: throw Error("invalid PNG filter type " + std::to_string(filter));
      }
      cur[i] = static_cast<std::uint8_t>(value & 0xFF);
    }
    for (std::size_t col = 0; col < w; ++col) {
      img(static_cast<int>(row), static_cast<int>(col)) =
          Rgb{cur[col * 3], cur[col * 3 + 1], cur[col * 3 + 2]};
    }
    std::swap(prev, cur);
  }
  return img;
}

inline void write_png(const std::string& path, const TraceImage& img) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path + "'");
}

inline TraceImage read_png(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_png(bytes);
  } catch (const Error& e) {
    throw Error(path + ": " + e.what());
  }
}

}  // namespace tlpsynth
