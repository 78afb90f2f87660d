#pragma once

// Core TLP trace domain types and the canonical CSV text format.
//
// A trace is an ordered list of transactions; once parsed, list position is
// the logical timestamp. Ingest timestamps are kept only as metadata.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tlpsynth/error.hpp"

namespace tlpsynth {

constexpr std::uint32_t kMinTlpBytes = 1;
constexpr std::uint32_t kMaxTlpBytes = 65535;  // high byte must fit one 8-bit channel
constexpr int kDefaultWidth = 512;
constexpr std::size_t kMaxTraceRecords =
    static_cast<std::size_t>(kDefaultWidth) * kDefaultWidth;

enum class Direction : std::uint8_t {
  tx = 0,  // host -> device
  rx = 1,  // device -> host
};

/// One TLP transaction. bytes == 0 is reserved as the image padding sentinel
/// and never appears in a valid trace.
struct TlpRecord {
  std::uint32_t bytes = 0;
  Direction dir = Direction::tx;
  std::optional<std::uint64_t> timestamp;  // ingest-only metadata, nanoseconds

  bool operator==(const TlpRecord&) const = default;
};

struct Trace {
  std::vector<TlpRecord> records;
  std::string source_id;

  bool operator==(const Trace&) const = default;
};

inline void validate_record(const TlpRecord& rec) {
  if (rec.bytes < kMinTlpBytes || rec.bytes > kMaxTlpBytes) {
    throw Error("TLP byte count " + std::to_string(rec.bytes) +
                " outside [1, 65535]");
  }
  if (rec.dir != Direction::tx && rec.dir != Direction::rx) {
    throw Error("TLP direction not in {0, 1}");
  }
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

// Strict unsigned decimal: digits only, no sign, no whitespace.
inline bool parse_uint(std::string_view token, std::uint64_t& out) {
  if (token.empty()) return false;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, out, 10);
  return ec == std::errc{} && ptr == last;
}

}  // namespace detail

/// Parses the trace CSV format: header `timestamp,dir,bytes` or `dir,bytes`,
/// decimal unsigned fields, LF line endings, `#` comment lines ignored.
/// When timestamps are present the records are stable-sorted by timestamp.
inline Trace parse_trace_text(std::string_view text, std::string source_id = "",
                              std::size_t max_records = kMaxTraceRecords) {
  Trace trace;
  trace.source_id = std::move(source_id);

  auto lines = detail::split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();

  bool have_header = false;
  bool has_timestamps = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    const std::string where = "line " + std::to_string(i + 1);
    if (line.empty() || line.front() == '#') continue;

    if (!have_header) {
      if (line == "timestamp,dir,bytes") {
        has_timestamps = true;
      } else if (line == "dir,bytes") {
        has_timestamps = false;
      } else {
        throw Error(where + ": expected header 'timestamp,dir,bytes' or 'dir,bytes'");
      }
      have_header = true;
      continue;
    }

    auto fields = detail::split(line, ',');
    const std::size_t expected = has_timestamps ? 3 : 2;
    if (fields.size() != expected) {
      throw Error(where + ": expected " + std::to_string(expected) +
                  " fields, got " + std::to_string(fields.size()));
    }

    TlpRecord rec;
    std::size_t f = 0;
    if (has_timestamps) {
      std::uint64_t ts = 0;
      if (!detail::parse_uint(fields[f], ts)) {
        throw Error(where + ": malformed timestamp '" + std::string(fields[f]) + "'");
      }
      rec.timestamp = ts;
      ++f;
    }
    std::uint64_t dir = 0;
    if (!detail::parse_uint(fields[f], dir)) {
      throw Error(where + ": malformed direction '" + std::string(fields[f]) + "'");
    }
    if (dir > 1) throw Error(where + ": direction " + std::to_string(dir) + " not in {0, 1}");
    rec.dir = static_cast<Direction>(dir);
    ++f;
    std::uint64_t bytes = 0;
    if (!detail::parse_uint(fields[f], bytes)) {
      throw Error(where + ": malformed byte count '" + std::string(fields[f]) + "'");
    }
    if (bytes < kMinTlpBytes || bytes > kMaxTlpBytes) {
      throw Error(where + ": byte count " + std::to_string(bytes) + " outside [1, 65535]");
    }
    rec.bytes = static_cast<std::uint32_t>(bytes);

    trace.records.push_back(rec);
    if (trace.records.size() > max_records) {
      throw Error("trace exceeds " + std::to_string(max_records) + " records");
    }
  }

  if (!have_header) throw Error("missing trace CSV header");

  if (has_timestamps) {
    std::stable_sort(trace.records.begin(), trace.records.end(),
                     [](const TlpRecord& a, const TlpRecord& b) {
                       return a.timestamp < b.timestamp;
                     });
  }
  return trace;
}

/// Emits the canonical CSV document; the 3-column header is used only when
/// every record carries a timestamp.
inline std::string write_trace_text(const Trace& trace) {
  const bool with_ts =
      !trace.records.empty() &&
      std::all_of(trace.records.begin(), trace.records.end(),
                  [](const TlpRecord& r) { return r.timestamp.has_value(); });

  std::string out;
  out.reserve(16 + trace.records.size() * 12);
  out += with_ts ? "timestamp,dir,bytes\n" : "dir,bytes\n";
  for (const TlpRecord& rec : trace.records) {
    validate_record(rec);
    if (with_ts) {
      out += std::to_string(*rec.timestamp);
      out += ',';
    }
    out += rec.dir == Direction::rx ? '1' : '0';
    out += ',';
    out += std::to_string(rec.bytes);
    out += '\n';
  }
  return out;
}

}  // namespace tlpsynth
