#pragma once

// Built-in trace generators: a uniform-random worst-case baseline and a NIC
// workload simulator that expands each transfer into the causal TLP template
//
//   TX: doorbell write (dir 0) -> descriptor fetch (dir 1)
//       -> payload chunks (dir 1, each <= max_payload) -> MSI (dir 1)
//   RX: same without the doorbell
//
// plus a validator that re-parses a trace against that template.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tlpsynth/codec.hpp"
#include "tlpsynth/rng.hpp"
#include "tlpsynth/trace.hpp"

namespace tlpsynth {

struct NicWorkloadConfig {
  std::uint64_t seed = 0;
  std::uint32_t n_transfers = 1;
  std::uint32_t mtu = 1500;          // payload length drawn uniform in [64, mtu]
  std::uint32_t max_payload = 256;   // TLP payload cap
  std::uint32_t doorbell_bytes = 4;
  std::uint32_t descriptor_bytes = 16;
  std::uint32_t msi_bytes = 4;
  double rx_fraction = 0.5;
};

enum class TransferKind { tx, rx };

inline void validate_config(const NicWorkloadConfig& cfg) {
  auto check_bytes = [](std::uint32_t v, const char* what) {
    if (v < kMinTlpBytes || v > kMaxTlpBytes) {
      throw Error(std::string(what) + " must be in [1, 65535]");
    }
  };
  check_bytes(cfg.max_payload, "max_payload");
  check_bytes(cfg.doorbell_bytes, "doorbell_bytes");
  check_bytes(cfg.descriptor_bytes, "descriptor_bytes");
  check_bytes(cfg.msi_bytes, "msi_bytes");
  if (cfg.n_transfers < 1) throw Error("n_transfers must be >= 1");
  if (cfg.mtu < 64) throw Error("mtu must be >= 64 (payload lengths are drawn from [64, mtu])");
  if (cfg.rx_fraction < 0.0 || cfg.rx_fraction > 1.0) {
    throw Error("rx_fraction must be in [0, 1]");
  }
}

/// Worst-case baseline: every field independently uniform.
inline Trace random_trace(std::uint64_t seed, std::size_t length) {
  if (length > kMaxTraceRecords) {
    throw Error("trace length " + std::to_string(length) + " exceeds " +
                std::to_string(kMaxTraceRecords));
  }
  SplitMix64 rng(seed);
  Trace trace;
  trace.source_id = "random-" + std::to_string(seed);
  trace.records.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    TlpRecord rec;
    rec.bytes = rng.uniform_int(kMinTlpBytes, kMaxTlpBytes);
    rec.dir = rng.bounded(2) == 0 ? Direction::tx : Direction::rx;
    trace.records.push_back(rec);
  }
  return trace;
}

/// Expands one transfer into its TLP template. Payload chunks are emitted as
/// full max_payload TLPs followed by the remainder, summing to payload_len.
inline void append_transfer(std::vector<TlpRecord>& out, TransferKind kind,
                            std::uint32_t payload_len, const NicWorkloadConfig& cfg) {
  if (kind == TransferKind::tx) {
    out.push_back(TlpRecord{cfg.doorbell_bytes, Direction::tx, std::nullopt});
  }
  out.push_back(TlpRecord{cfg.descriptor_bytes, Direction::rx, std::nullopt});
  std::uint32_t remaining = payload_len;
  while (remaining > 0) {
    const std::uint32_t chunk = remaining < cfg.max_payload ? remaining : cfg.max_payload;
    out.push_back(TlpRecord{chunk, Direction::rx, std::nullopt});
    remaining -= chunk;
  }
  out.push_back(TlpRecord{cfg.msi_bytes, Direction::rx, std::nullopt});
}

/// Per transfer, two draws in fixed order: kind (u < rx_fraction selects RX),
/// then payload length uniform in [64, mtu].
inline Trace nic_workload_trace(const NicWorkloadConfig& cfg) {
  validate_config(cfg);
  SplitMix64 rng(cfg.seed);
  Trace trace;
  trace.source_id = "nic-" + std::to_string(cfg.seed);
  for (std::uint32_t t = 0; t < cfg.n_transfers; ++t) {
    const TransferKind kind =
        rng.uniform01() < cfg.rx_fraction ? TransferKind::rx : TransferKind::tx;
    const std::uint32_t payload_len = rng.uniform_int(64, cfg.mtu);
    append_transfer(trace.records, kind, payload_len, cfg);
    if (trace.records.size() > kMaxTraceRecords) {
      throw Error("workload of " + std::to_string(cfg.n_transfers) +
                  " transfers exceeds " + std::to_string(kMaxTraceRecords) + " records");
    }
  }
  return trace;
}

/// Checks that a trace is a concatenation of well-formed transfer templates.
/// Returns nullopt when valid, otherwise a description of the first problem.
/// Backward dynamic program over record positions, so ambiguous boundaries
/// (e.g. a remainder chunk the size of an MSI) cannot cause false rejects.
inline std::optional<std::string> validate_workload_trace(const Trace& trace,
                                                          const NicWorkloadConfig& cfg) {
  validate_config(cfg);
  const auto& recs = trace.records;
  const std::size_t n = recs.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (recs[i].bytes < kMinTlpBytes || recs[i].bytes > kMaxTlpBytes) {
      return "record " + std::to_string(i) + ": byte count out of range";
    }
  }

  auto is = [&](std::size_t i, std::uint32_t bytes, Direction dir) {
    return i < n && recs[i].bytes == bytes && recs[i].dir == dir;
  };

  const std::size_t max_full = cfg.mtu / cfg.max_payload;

  // All positions just past a complete transfer template starting at i.
  // Payload chunks are f full TLPs, either ending evenly or followed by one
  // short remainder TLP; the chunk sum must lie in [64, mtu].
  auto transfer_ends = [&](std::size_t i) {
    std::vector<std::size_t> ends;
    std::size_t j = i;
    // TX transfers carry a doorbell prefix; a doorbell (dir tx) can never be
    // mistaken for a descriptor (dir rx), so this never needs backtracking.
    if (is(j, cfg.doorbell_bytes, Direction::tx)) ++j;
    if (!is(j, cfg.descriptor_bytes, Direction::rx)) return ends;
    const std::size_t k = j + 1;
    std::size_t full = 0;
    while (full <= max_full && is(k + full, cfg.max_payload, Direction::rx)) ++full;
    for (std::size_t f = 0; f <= full; ++f) {
      if (f >= 1) {
        const std::uint64_t len = std::uint64_t(f) * cfg.max_payload;
        if (len >= 64 && len <= cfg.mtu && is(k + f, cfg.msi_bytes, Direction::rx)) {
          ends.push_back(k + f + 1);
        }
      }
      const std::size_t rpos = k + f;
      if (rpos < n && recs[rpos].dir == Direction::rx && recs[rpos].bytes < cfg.max_payload) {
        const std::uint64_t len = std::uint64_t(f) * cfg.max_payload + recs[rpos].bytes;
        if (len >= 64 && len <= cfg.mtu && is(rpos + 1, cfg.msi_bytes, Direction::rx)) {
          ends.push_back(rpos + 2);
        }
      }
    }
    return ends;
  };

  if (n == 0) return "empty trace contains no transfers";

  // valid[i] == suffix starting at record i parses as whole transfers.
  std::vector<char> valid(n + 1, 0);
  valid[n] = 1;
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t e : transfer_ends(i)) {
      if (valid[e]) {
        valid[i] = 1;
        break;
      }
    }
  }
  if (valid[0]) return std::nullopt;

  // Diagnostics: how far a prefix of complete transfers can reach from 0.
  std::vector<char> reach(n + 1, 0);
  reach[0] = 1;
  std::size_t farthest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!reach[i]) continue;
    for (std::size_t e : transfer_ends(i)) {
      reach[e] = 1;
      if (e > farthest) farthest = e;
    }
  }
  return "trace violates the doorbell->descriptor->payload->MSI template near record " +
         std::to_string(farthest);
}

/// Seeded corpus factory: image k uses seed base_seed + k and id "corpus-000k".
inline std::vector<std::pair<std::string, TraceImage>> make_corpus(
    const NicWorkloadConfig& config, int n_images, int width) {
  if (n_images < 1) throw Error("corpus needs at least one image");
  std::vector<std::pair<std::string, TraceImage>> corpus;
  corpus.reserve(static_cast<std::size_t>(n_images));
  for (int i = 0; i < n_images; ++i) {
    NicWorkloadConfig cfg = config;
    cfg.seed = config.seed + static_cast<std::uint64_t>(i);
    std::string id = std::to_string(i);
    id.insert(0, id.size() < 4 ? 4 - id.size() : 0, '0');
    corpus.emplace_back("corpus-" + id, encode_trace(nic_workload_trace(cfg), width));
  }
  return corpus;
}

}  // namespace tlpsynth
