#pragma once

// Feature extraction and nearest-ground-truth matching. Built-in extractors
// are cheap image statistics; neural extractors stay outside the library and
// plug in through embedding CSV files keyed by sample id.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tlpsynth/codec.hpp"
#include "tlpsynth/image.hpp"

namespace tlpsynth {

struct Embedding {
  std::vector<double> values;
  std::string extractor_id;
};

/// Per-channel row sums, dimension 3W: entry c*W + l sums channel c over row l.
/// Integer accumulation, cast to double at the end.
inline Embedding extract_naive(const TraceImage& img) {
  const int w = img.width();
  std::vector<std::uint64_t> sums(3 * static_cast<std::size_t>(w), 0);
  for (int row = 0; row < w; ++row) {
    std::uint64_t r = 0, g = 0, b = 0;
    for (int col = 0; col < w; ++col) {
      const Rgb& p = img(row, col);
      r += p.r;
      g += p.g;
      b += p.b;
    }
    sums[row] = r;
    sums[w + row] = g;
    sums[2 * static_cast<std::size_t>(w) + row] = b;
  }
  Embedding e;
  e.extractor_id = "naive";
  e.values.assign(sums.begin(), sums.end());
  return e;
}

/// 64-bin histogram of decoded byte sizes (bin width 1024) per direction:
/// entries 0..63 count TX records, 64..127 RX.
inline Embedding extract_histogram(const TraceImage& img) {
  std::vector<double> bins(128, 0.0);
  for (const Rgb& p : img.pixels()) {
    if (auto rec = decode_pixel(p)) {
      const std::size_t bin = rec->bytes / 1024;  // bytes <= 65535 -> bin <= 63
      bins[(rec->dir == Direction::rx ? 64 : 0) + bin] += 1.0;
    }
  }
  return Embedding{std::move(bins), "histogram"};
}

/// Embedding CSV: one `sample_id,v1,...,vd` line per sample, decimal floats.
inline std::map<std::string, Embedding> load_external_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embedding file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  std::map<std::string, Embedding> out;
  std::size_t dim = 0;
  const std::string id = "external:" + path;
  std::size_t line_no = 0;
  for (std::string_view line : detail::split(text, '\n')) {
    ++line_no;
    const std::string where = path + ":" + std::to_string(line_no);
    if (line.empty()) continue;
    auto fields = detail::split(line, ',');
    if (fields.size() < 2) throw Error(where + ": expected 'sample_id,v1,...'");
    const std::string sample_id(fields[0]);
    if (sample_id.empty()) throw Error(where + ": empty sample id");
    if (out.count(sample_id)) throw Error(where + ": duplicate sample id '" + sample_id + "'");

    Embedding e;
    e.extractor_id = id;
    e.values.reserve(fields.size() - 1);
    for (std::size_t f = 1; f < fields.size(); ++f) {
      double v = 0.0;
      const char* first = fields[f].data();
      const char* last = first + fields[f].size();
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc{} || ptr != last) {
        throw Error(where + ": malformed value '" + std::string(fields[f]) + "'");
      }
      if (!std::isfinite(v)) throw Error(where + ": non-finite value");
      e.values.push_back(v);
    }
    if (dim == 0) {
      dim = e.values.size();
    } else if (e.values.size() != dim) {
      throw Error(where + ": dimension " + std::to_string(e.values.size()) +
                  " differs from " + std::to_string(dim));
    }
    out.emplace(sample_id, std::move(e));
  }
  if (out.empty()) throw Error(path + ": no embeddings found");
  return out;
}

inline double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.values.size() != b.values.size()) {
    throw Error("cosine similarity: dimensions differ (" + std::to_string(a.values.size()) +
                " vs " + std::to_string(b.values.size()) + ")");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error("cosine similarity: zero-norm embedding");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// PSNR ceiling; identical images report exactly this so orderings stay total.
constexpr double kPsnrCap = 200.0;

inline double psnr(const TraceImage& x, const TraceImage& y) {
  require_same_size(x, y, "psnr");
  std::uint64_t sq = 0;
  const auto& xp = x.pixels();
  const auto& yp = y.pixels();
  for (std::size_t i = 0; i < xp.size(); ++i) {
    const int dr = int(xp[i].r) - yp[i].r;
    const int dg = int(xp[i].g) - yp[i].g;
    const int db = int(xp[i].b) - yp[i].b;
    sq += std::uint64_t(dr * dr) + std::uint64_t(dg * dg) + std::uint64_t(db * db);
  }
  if (sq == 0) return kPsnrCap;
  const double mse = static_cast<double>(sq) / (3.0 * static_cast<double>(xp.size()));
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

enum class Similarity { cosine, psnr };

inline Similarity parse_similarity(std::string_view s) {
  if (s == "cosine") return Similarity::cosine;
  if (s == "psnr") return Similarity::psnr;
  throw Error("unknown similarity '" + std::string(s) + "' (expected cosine|psnr)");
}

inline const char* to_string(Similarity s) {
  return s == Similarity::cosine ? "cosine" : "psnr";
}

/// Extractor handle: a built-in computation or an external lookup table.
class Extractor {
 public:
  static Extractor naive() { return Extractor("naive", nullptr); }
  static Extractor histogram() { return Extractor("histogram", nullptr); }
  static Extractor external(const std::string& csv_path) {
    auto table = std::make_shared<std::map<std::string, Embedding>>(
        load_external_embeddings(csv_path));
    return Extractor("external:" + csv_path, std::move(table));
  }
  static Extractor from_id(std::string_view id) {
    if (id == "naive") return naive();
    if (id == "histogram") return histogram();
    if (id.rfind("external:", 0) == 0) return external(std::string(id.substr(9)));
    throw Error("unknown extractor '" + std::string(id) +
                "' (expected naive|histogram|external:PATH)");
  }

  const std::string& id() const { return id_; }
  bool is_external() const { return table_ != nullptr; }

  /// Computes a built-in embedding; external extractors cannot embed new images.
  Embedding embed_image(const TraceImage& img) const {
    if (is_external()) {
      throw Error("external extractor cannot embed new images; embeddings come from the file");
    }
    return id_ == "naive" ? extract_naive(img) : extract_histogram(img);
  }

  /// Embeds by sample id: table lookup for external, computation otherwise.
  Embedding embed(const std::string& sample_id, const TraceImage& img) const {
    if (!is_external()) return embed_image(img);
    auto it = table_->find(sample_id);
    if (it == table_->end()) {
      throw Error("no external embedding for sample id '" + sample_id + "'");
    }
    return it->second;
  }

 private:
  Extractor(std::string id, std::shared_ptr<const std::map<std::string, Embedding>> table)
      : id_(std::move(id)), table_(std::move(table)) {}

  std::string id_;
  std::shared_ptr<const std::map<std::string, Embedding>> table_;
};

struct CorpusEntry {
  std::string sample_id;
  TraceImage image;
  Embedding embedding;
};

/// Immutable real-sample index; embeddings computed once at build time.
class CorpusIndex {
 public:
  CorpusIndex(std::vector<CorpusEntry> entries, std::string extractor_id, Similarity similarity)
      : entries_(std::move(entries)),
        extractor_id_(std::move(extractor_id)),
        similarity_(similarity) {}

  const std::vector<CorpusEntry>& entries() const { return entries_; }
  const std::string& extractor_id() const { return extractor_id_; }
  Similarity similarity() const { return similarity_; }

 private:
  std::vector<CorpusEntry> entries_;  // sorted by sample_id
  std::string extractor_id_;
  Similarity similarity_;
};

inline CorpusIndex build_corpus_index(const std::vector<std::pair<std::string, TraceImage>>& images,
                                      const Extractor& extractor, Similarity similarity) {
  if (images.empty()) throw Error("corpus is empty");
  std::set<std::string> seen;
  std::vector<CorpusEntry> entries;
  entries.reserve(images.size());
  for (const auto& [sample_id, image] : images) {
    if (!seen.insert(sample_id).second) {
      throw Error("duplicate corpus sample id '" + sample_id + "'");
    }
    entries.push_back(CorpusEntry{sample_id, image, extractor.embed(sample_id, image)});
    if (entries.back().embedding.values.size() != entries.front().embedding.values.size()) {
      throw Error("corpus embeddings disagree on dimension (sample '" + sample_id + "')");
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const CorpusEntry& a, const CorpusEntry& b) { return a.sample_id < b.sample_id; });
  return CorpusIndex(std::move(entries), extractor.id(), similarity);
}

struct MatchResult {
  std::string sample_id;
  double similarity = 0.0;  // higher = more similar, for either metric
  double distance = 0.0;    // 1 - cosine, or kPsnrCap - psnr
  TraceImage real_image;
};

/// Picks the corpus entry maximizing the index similarity metric; ties go to
/// the lexicographically smallest sample id. Cosine compares embeddings,
/// PSNR compares the images themselves.
inline MatchResult match_ground_truth(const TraceImage& query_img, const Embedding& query_emb,
                                      const CorpusIndex& index) {
  if (query_emb.extractor_id != index.extractor_id()) {
    throw Error("extractor mismatch: query '" + query_emb.extractor_id + "' vs index '" +
                index.extractor_id() + "'");
  }
  const CorpusEntry* best = nullptr;
  double best_score = 0.0;
  for (const CorpusEntry& entry : index.entries()) {  // ascending sample_id
    const double score = index.similarity() == Similarity::cosine
                             ? cosine_similarity(query_emb, entry.embedding)
                             : psnr(query_img, entry.image);
    if (!best || score > best_score) {
      best = &entry;
      best_score = score;
    }
  }
  const double distance =
      index.similarity() == Similarity::cosine ? 1.0 - best_score : kPsnrCap - best_score;
  return MatchResult{best->sample_id, best_score, distance, best->image};
}

/// Convenience for built-in extractors; external tables need an explicit id.
inline MatchResult match_ground_truth(const TraceImage& query_img, const CorpusIndex& index,
                                      const Extractor& extractor) {
  return match_ground_truth(query_img, extractor.embed_image(query_img), index);
}

}  // namespace tlpsynth
