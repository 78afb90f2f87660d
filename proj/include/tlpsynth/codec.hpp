#pragma once

// Bidirectional mapping between traces and RGB images. A transaction maps to
// one pixel: red carries the high payload byte, green the low byte, blue the
// direction (0 or 255). Records fill the raster row-major, so logical time
// runs left-to-right, top-to-bottom; unused pixels stay (0,0,0).

#include <optional>

#include "tlpsynth/image.hpp"
#include "tlpsynth/trace.hpp"

namespace tlpsynth {

// Midpoint snap/decode threshold for the binary blue channel.
constexpr std::uint8_t kDirThreshold = 128;

inline Rgb encode_record(const TlpRecord& rec) {
  validate_record(rec);
  const std::uint32_t high = rec.bytes / 256;
  return Rgb{static_cast<std::uint8_t>(high),
             static_cast<std::uint8_t>(rec.bytes - 256 * high),
             static_cast<std::uint8_t>(rec.dir == Direction::rx ? 255 : 0)};
}

/// Inverse pixel mapping. Returns nullopt for padding: a zero byte count is
/// reserved for padding, so any pixel with r == 0 and g == 0 is padding no
/// matter what the (possibly noisy) blue channel holds.
inline std::optional<TlpRecord> decode_pixel(const Rgb& p) {
  const std::uint32_t bytes = 256u * p.r + p.g;
  if (bytes == 0) return std::nullopt;
  return TlpRecord{bytes, p.b >= kDirThreshold ? Direction::rx : Direction::tx,
                   std::nullopt};
}

inline TraceImage encode_trace(const Trace& trace, int width) {
  TraceImage img(width);
  const std::size_t capacity = img.pixel_count();
  if (trace.records.size() > capacity) {
    throw Error("trace of " + std::to_string(trace.records.size()) +
                " records does not fit a " + std::to_string(width) + "x" +
                std::to_string(width) + " image");
  }
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    img.pixels()[k] = encode_record(trace.records[k]);
  }
  return img;
}

/// Row-major scan; padding pixels are skipped wherever they occur, so
/// dropouts inside generated images lose one record, not the whole tail.
inline Trace decode_image(const TraceImage& img) {
  Trace trace;
  trace.records.reserve(img.pixel_count());
  for (const Rgb& p : img.pixels()) {
    if (auto rec = decode_pixel(p)) trace.records.push_back(*rec);
  }
  return trace;
}

/// Snaps the blue channel to {0, 255}; red and green pass through. Idempotent.
inline TraceImage normalize_image(const TraceImage& raw) {
  TraceImage img = raw;
  for (Rgb& p : img.pixels()) {
    p.b = p.b >= kDirThreshold ? 255 : 0;
  }
  return img;
}

}  // namespace tlpsynth
