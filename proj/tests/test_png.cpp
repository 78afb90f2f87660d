#include "tlpsynth/png_io.hpp"

#include <gtest/gtest.h>
#include <zlib.h>

#include <cstring>

#include "tlpsynth/rng.hpp"
#include "test_util.hpp"

using namespace tlpsynth;

namespace {

// Test-side PNG builder so the reader can be fed streams our writer never
// produces: arbitrary filter types, color types, bit depths, interlacing.
void put32(std::vector<std::uint8_t>& v, std::uint32_t x) {
  v.push_back(x >> 24);
  v.push_back((x >> 16) & 0xFF);
  v.push_back((x >> 8) & 0xFF);
  v.push_back(x & 0xFF);
}

void chunk(std::vector<std::uint8_t>& v, const char* type, const std::vector<std::uint8_t>& data) {
  put32(v, static_cast<std::uint32_t>(data.size()));
  const std::size_t at = v.size();
  v.insert(v.end(), type, type + 4);
  v.insert(v.end(), data.begin(), data.end());
  put32(v, static_cast<std::uint32_t>(crc32(0L, v.data() + at, static_cast<uInt>(4 + data.size()))));
}

std::vector<std::uint8_t> build_png(std::uint32_t w, std::uint32_t h, std::uint8_t depth,
                                    std::uint8_t color, std::uint8_t interlace,
                                    const std::vector<std::uint8_t>& raw_scanlines) {
  std::vector<std::uint8_t> idat(compressBound(static_cast<uLong>(raw_scanlines.size())));
  uLongf len = idat.size();
  compress2(idat.data(), &len, raw_scanlines.data(), static_cast<uLong>(raw_scanlines.size()), 6);
  idat.resize(len);

  std::vector<std::uint8_t> png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  std::vector<std::uint8_t> ihdr;
  put32(ihdr, w);
  put32(ihdr, h);
  ihdr.push_back(depth);
  ihdr.push_back(color);
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(interlace);
  chunk(png, "IHDR", ihdr);
  chunk(png, "IDAT", idat);
  chunk(png, "IEND", {});
  return png;
}

std::uint8_t paeth_ref(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
  if (pb <= pc) return static_cast<std::uint8_t>(b);
  return static_cast<std::uint8_t>(c);
}

}  // namespace

TEST(Png, RoundTripRandomImages) {
  SplitMix64 rng(88);
  for (int iter = 0; iter < 30; ++iter) {
    const int w = 1 + static_cast<int>(rng.bounded(24));
    const TraceImage img = testutil::random_image(rng, w);
    EXPECT_EQ(decode_png(encode_png(img)), img);
  }
}

TEST(Png, WriterIsDeterministic) {
  SplitMix64 rng(17);
  const TraceImage img = testutil::random_image(rng, 32);
  EXPECT_EQ(encode_png(img), encode_png(img));
}

TEST(Png, FileRoundTrip) {
  testutil::TempDir tmp;
  SplitMix64 rng(4);
  const TraceImage img = testutil::random_image(rng, 16);
  write_png(tmp.file("x.png"), img);
  EXPECT_EQ(read_png(tmp.file("x.png")), img);
}

TEST(Png, ReaderHandlesAllFilterTypes) {
  // 5x5 image, each row filtered with a different type (0..4).
  SplitMix64 rng(6);
  const int w = 5;
  const TraceImage img = testutil::random_image(rng, w);

  std::vector<std::uint8_t> plain(static_cast<std::size_t>(w) * w * 3);
  for (int row = 0; row < w; ++row) {
    for (int col = 0; col < w; ++col) {
      const Rgb& p = img(row, col);
      plain[(row * w + col) * 3 + 0] = p.r;
      plain[(row * w + col) * 3 + 1] = p.g;
      plain[(row * w + col) * 3 + 2] = p.b;
    }
  }

  const std::size_t stride = 3 * w;
  std::vector<std::uint8_t> raw;
  for (int row = 0; row < w; ++row) {
    const std::uint8_t filter = static_cast<std::uint8_t>(row % 5);
    raw.push_back(filter);
    for (std::size_t i = 0; i < stride; ++i) {
      const int x = plain[row * stride + i];
      const int a = i >= 3 ? plain[row * stride + i - 3] : 0;
      const int b = row > 0 ? plain[(row - 1) * stride + i] : 0;
      const int c = (row > 0 && i >= 3) ? plain[(row - 1) * stride + i - 3] : 0;
      int f = 0;
      switch (filter) {
        case 0: f = x; break;
        case 1: f = x - a; break;
        case 2: f = x - b; break;
        case 3: f = x - (a + b) / 2; break;
        case 4: f = x - paeth_ref(a, b, c); break;
      }
      raw.push_back(static_cast<std::uint8_t>(f & 0xFF));
    }
  }

  const auto png = build_png(w, w, 8, 2, 0, raw);
  EXPECT_EQ(decode_png(png), img);
}

TEST(Png, RejectsWrongColorType) {
  // Grayscale: 1 byte per pixel.
  std::vector<std::uint8_t> raw = {0, 10, 20, 0, 30, 40};
  EXPECT_THROW(decode_png(build_png(2, 2, 8, 0, 0, raw)), Error);
}

TEST(Png, RejectsSixteenBitDepth) {
  std::vector<std::uint8_t> raw(2 * (1 + 2 * 6), 0);
  raw[0] = 0;
  raw[13] = 0;
  EXPECT_THROW(decode_png(build_png(2, 2, 16, 2, 0, raw)), Error);
}

TEST(Png, RejectsInterlaced) {
  std::vector<std::uint8_t> raw(2 * (1 + 2 * 3), 0);
  EXPECT_THROW(decode_png(build_png(2, 2, 8, 2, 1, raw)), Error);
}

TEST(Png, RejectsNonSquare) {
  std::vector<std::uint8_t> raw(2 * (1 + 3 * 3), 0);
  EXPECT_THROW(decode_png(build_png(3, 2, 8, 2, 0, raw)), Error);
}

TEST(Png, RejectsGarbageAndTruncation) {
  EXPECT_THROW(decode_png(std::vector<std::uint8_t>{1, 2, 3}), Error);
  SplitMix64 rng(12);
  auto bytes = encode_png(testutil::random_image(rng, 8));
  bytes.resize(bytes.size() / 2);
  EXPECT_THROW(decode_png(bytes), Error);
}

TEST(Png, RejectsCorruptedCrc) {
  SplitMix64 rng(13);
  auto bytes = encode_png(testutil::random_image(rng, 8));
  bytes[bytes.size() / 2] ^= 0xFF;  // somewhere inside IDAT
  EXPECT_THROW(decode_png(bytes), Error);
}

TEST(Png, NeverCrashesOnMutatedOrGarbageBytes) {
  SplitMix64 rng(2718);
  const TraceImage img = testutil::random_image(rng, 12);
  const auto valid = encode_png(img);
  for (int iter = 0; iter < 500; ++iter) {
    std::vector<std::uint8_t> bytes;
    if (iter % 3 == 0) {
      bytes.resize(rng.bounded(200));
      for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.bounded(256));
    } else if (iter % 3 == 1) {
      bytes = valid;
      bytes.resize(rng.bounded(bytes.size() + 1));
    } else {
      bytes = valid;
      for (int flips = 0; flips < 4; ++flips) {
        bytes[rng.bounded(bytes.size())] ^= static_cast<std::uint8_t>(1 + rng.bounded(255));
      }
    }
    try {
      (void)decode_png(bytes);  // decoding may succeed or throw, never crash
    } catch (const Error&) {
    }
  }
}

TEST(Png, SkipsAncillaryChunks) {
  SplitMix64 rng(14);
  const TraceImage img = testutil::random_image(rng, 4);
  auto bytes = encode_png(img);
  // Splice a tEXt chunk between IHDR and IDAT (signature + IHDR = 8 + 25).
  std::vector<std::uint8_t> text_chunk;
  chunk(text_chunk, "tEXt", {'k', 0, 'v'});
  bytes.insert(bytes.begin() + 33, text_chunk.begin(), text_chunk.end());
  EXPECT_EQ(decode_png(bytes), img);
}
