#pragma once

// End-to-end pipeline: ingest (text or image), normalize, match against the
// real corpus, dispersion-calibrate, decode, score, report. One input failing
// is recorded in the report and does not abort the batch.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tlpsynth/calibration.hpp"
#include "tlpsynth/codec.hpp"
#include "tlpsynth/extractors.hpp"
#include "tlpsynth/metrics.hpp"
#include "tlpsynth/png_io.hpp"
#include "tlpsynth/trace.hpp"

namespace tlpsynth {

/// Shortest round-trip decimal form; stable across runs by construction.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error("failed to format a double");
  return std::string(buf, ptr);
}

/// Parses "p/q" or a plain decimal; used for beta so the exact kernel weights
/// survive the command line without float-literal drift.
inline double parse_rational(std::string_view token) {
  const std::size_t slash = token.find('/');
  auto parse_part = [&](std::string_view part) {
    double v = 0.0;
    const char* first = part.data();
    const char* last = first + part.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
      throw Error("malformed number '" + std::string(token) + "'");
    }
    return v;
  };
  if (slash == std::string_view::npos) return parse_part(token);
  const double num = parse_part(token.substr(0, slash));
  const double den = parse_part(token.substr(slash + 1));
  if (den == 0.0) throw Error("zero denominator in '" + std::string(token) + "'");
  return num / den;
}

inline std::vector<double> parse_rational_list(std::string_view text) {
  std::vector<double> out;
  for (std::string_view tok : detail::split(text, ',')) out.push_back(parse_rational(tok));
  return out;
}

inline std::int64_t parse_int(std::string_view token, const char* what) {
  std::int64_t v = 0;
  const char* first = token.data();
  const char* last = first + token.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw Error(std::string("malformed ") + what + " '" + std::string(token) + "'");
  }
  return v;
}

struct PipelineConfig {
  std::string input_kind = "auto";  // text | image | auto (by extension)
  std::vector<std::string> inputs;
  std::string corpus_dir;
  std::string output_dir;
  int width = kDefaultWidth;
  CalibrationParams calib;
  std::string extractor_id = "naive";
  std::string similarity_id = "cosine";
  int segments = 16;
  double w_t = 1.0;
  std::string report_path;  // defaults to <output_dir>/report.csv
};

/// Applies one `key = value` setting. Unknown keys are errors.
inline void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  const std::string val(value);
  if (key == "input_kind") {
    if (val != "text" && val != "image" && val != "auto") {
      throw Error("input_kind must be text|image|auto");
    }
    cfg.input_kind = val;
  } else if (key == "inputs") {
    cfg.inputs.clear();
    for (std::string_view tok : detail::split(value, ',')) {
      if (!tok.empty()) cfg.inputs.emplace_back(tok);
    }
  } else if (key == "corpus_dir") {
    cfg.corpus_dir = val;
  } else if (key == "output_dir") {
    cfg.output_dir = val;
  } else if (key == "width") {
    cfg.width = static_cast<int>(parse_int(value, "width"));
  } else if (key == "alpha") {
    const auto vals = parse_rational_list(value);
    if (vals.size() != 3) throw Error("alpha needs exactly 3 weights");
    cfg.calib.alpha = {vals[0], vals[1], vals[2]};
  } else if (key == "beta") {
    cfg.calib.beta = parse_rational_list(value);
  } else if (key == "radius") {
    cfg.calib.radius = static_cast<int>(parse_int(value, "radius"));
  } else if (key == "lambda") {
    cfg.calib.lambda = parse_rational(value);
  } else if (key == "epsilon") {
    cfg.calib.epsilon = parse_rational(value);
  } else if (key == "variant") {
    cfg.calib.variant = parse_variant(value);
  } else if (key == "score_reduction") {
    cfg.calib.reduction = parse_reduction(value);
  } else if (key == "extractor") {
    cfg.extractor_id = val;
  } else if (key == "similarity") {
    parse_similarity(value);  // validate early
    cfg.similarity_id = val;
  } else if (key == "segments") {
    cfg.segments = static_cast<int>(parse_int(value, "segments"));
  } else if (key == "w_t") {
    cfg.w_t = parse_rational(value);
  } else if (key == "report") {
    cfg.report_path = val;
  } else {
    throw Error("unknown config key '" + std::string(key) + "'");
  }
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Plain `key = value` file with `#` comments.
inline void apply_config_file(PipelineConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::size_t line_no = 0;
  for (std::string_view line : detail::split(text, '\n')) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    try {
      set_config_value(cfg, key, value);
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

/// The fully resolved configuration, echoed into reports for reproducibility.
inline std::vector<std::pair<std::string, std::string>> config_echo(const PipelineConfig& cfg) {
  auto join = [](const auto& items, auto fmt) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += ',';
      out += fmt(items[i]);
    }
    return out;
  };
  std::vector<std::pair<std::string, std::string>> kv;
  kv.emplace_back("input_kind", cfg.input_kind);
  kv.emplace_back("inputs", join(cfg.inputs, [](const std::string& s) { return s; }));
  kv.emplace_back("corpus_dir", cfg.corpus_dir);
  kv.emplace_back("output_dir", cfg.output_dir);
  kv.emplace_back("width", std::to_string(cfg.width));
  kv.emplace_back("alpha", join(cfg.calib.alpha, format_double));
  kv.emplace_back("beta", join(cfg.calib.beta, format_double));
  kv.emplace_back("radius", std::to_string(cfg.calib.radius));
  kv.emplace_back("lambda", format_double(cfg.calib.lambda));
  kv.emplace_back("epsilon", format_double(cfg.calib.epsilon));
  kv.emplace_back("variant", to_string(cfg.calib.variant));
  kv.emplace_back("score_reduction", to_string(cfg.calib.reduction));
  kv.emplace_back("extractor", cfg.extractor_id);
  kv.emplace_back("similarity", cfg.similarity_id);
  kv.emplace_back("segments", std::to_string(cfg.segments));
  kv.emplace_back("w_t", format_double(cfg.w_t));
  kv.emplace_back("report", cfg.report_path);
  return kv;
}

struct InputOutcome {
  std::string input;
  bool ok = false;
  std::string error;
  std::string match_id;
  double similarity = 0.0;
  double distance = 0.0;
  std::size_t replaced_pixels = 0;
  double pe = 0.0;
  double te = 0.0;
  std::string trace_csv_path;
  std::string calibrated_png_path;
};

struct PipelineReport {
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<InputOutcome> inputs;
  std::optional<double> pe_harmonic_mean;
  std::optional<double> te_harmonic_mean;
  std::optional<double> fd_raw;
  std::optional<double> fd_calibrated;
  std::string extractor_id;
  std::string similarity_id;
  double lambda = 1.0;
};

namespace detail {

inline std::string sanitize_csv_field(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

}  // namespace detail

/// Per-input rows first, then summary rows in the metric-report schema.
inline void write_report_csv(std::ostream& out, const PipelineReport& report) {
  out << "# pipeline report\n";
  for (const auto& [key, value] : report.config) {
    out << "# " << key << " = " << value << "\n";
  }
  out << "input,match_id,similarity,replaced_pixels,pe,te,status,error\n";
  for (const InputOutcome& r : report.inputs) {
    out << detail::sanitize_csv_field(r.input) << ',';
    if (r.ok) {
      out << r.match_id << ',' << format_double(r.similarity) << ',' << r.replaced_pixels << ','
          << format_double(r.pe) << ',' << format_double(r.te) << ",ok,\n";
    } else {
      out << ",,,,,error," << detail::sanitize_csv_field(r.error) << "\n";
    }
  }
  std::size_t frames = 0;
  for (const InputOutcome& r : report.inputs) {
    if (r.ok) ++frames;
  }
  out << "metric,value,extractor,similarity,lambda,frames\n";
  auto row = [&](const char* name, const std::optional<double>& value) {
    if (!value) return;
    out << name << ',' << format_double(*value) << ',' << report.extractor_id << ','
        << report.similarity_id << ',' << format_double(report.lambda) << ',' << frames << "\n";
  };
  row("pe_harmonic_mean", report.pe_harmonic_mean);
  row("te_harmonic_mean", report.te_harmonic_mean);
  row("fd_raw", report.fd_raw);
  row("fd_calibrated", report.fd_calibrated);
}

/// Loads every .png in the directory, id = filename stem, sorted by filename.
inline std::vector<std::pair<std::string, TraceImage>> load_corpus_dir(const std::string& dir,
                                                                       int width) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error("corpus directory '" + dir + "' not found");
  std::vector<fs::path> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw Error("corpus directory '" + dir + "' holds no .png files");
  std::vector<std::pair<std::string, TraceImage>> corpus;
  corpus.reserve(paths.size());
  for (const fs::path& p : paths) {
    TraceImage img = read_png(p.string());
    if (img.width() != width) {
      throw Error("corpus image '" + p.string() + "' is " + std::to_string(img.width()) +
                  "x" + std::to_string(img.width()) + ", expected " + std::to_string(width));
    }
    corpus.emplace_back(p.stem().string(), std::move(img));
  }
  return corpus;
}

inline PipelineReport run_pipeline(const PipelineConfig& config) {
  namespace fs = std::filesystem;
  PipelineConfig cfg = config;
  if (cfg.inputs.empty()) throw Error("pipeline needs at least one input");
  if (cfg.corpus_dir.empty()) throw Error("pipeline needs a corpus directory");
  if (cfg.output_dir.empty()) throw Error("pipeline needs an output directory");
  if (cfg.width < 1) throw Error("width must be >= 1");
  cfg.calib.validate();
  if (cfg.report_path.empty()) {
    cfg.report_path = (fs::path(cfg.output_dir) / "report.csv").string();
  }

  const Extractor extractor = Extractor::from_id(cfg.extractor_id);
  const Similarity similarity = parse_similarity(cfg.similarity_id);
  MetricWeights weights = MetricWeights::uniform(cfg.segments);
  weights.w_t = cfg.w_t;
  weights.validate();
  if (cfg.width % cfg.segments != 0) {
    throw Error("segments must divide width for frame scoring");
  }

  const auto corpus = load_corpus_dir(cfg.corpus_dir, cfg.width);
  const CorpusIndex index = build_corpus_index(corpus, extractor, similarity);
  fs::create_directories(cfg.output_dir);

  PipelineReport report;
  report.config = config_echo(cfg);
  report.extractor_id = cfg.extractor_id;
  report.similarity_id = cfg.similarity_id;
  report.lambda = cfg.calib.lambda;

  std::vector<Embedding> raw_embeddings;
  std::vector<Embedding> calibrated_embeddings;
  std::vector<double> pe_values;
  std::vector<double> te_values;

  for (std::size_t i = 0; i < cfg.inputs.size(); ++i) {
    const std::string& input = cfg.inputs[i];
    InputOutcome outcome;
    outcome.input = input;
    try {
      // Stage 0: ingest.
      const fs::path in_path(input);
      std::string kind = cfg.input_kind;
      if (kind == "auto") {
        const std::string ext = in_path.extension().string();
        if (ext == ".csv") kind = "text";
        else if (ext == ".png") kind = "image";
        else throw Error("cannot infer input kind from '" + ext + "' (use input_kind)");
      }
      TraceImage raw(cfg.width);
      if (kind == "text") {
        std::ifstream in(input, std::ios::binary);
        if (!in) throw Error("cannot open input '" + input + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        raw = encode_trace(parse_trace_text(buf.str(), input), cfg.width);
      } else {
        raw = read_png(input);
        if (raw.width() != cfg.width) {
          throw Error("input is " + std::to_string(raw.width()) + "x" +
                      std::to_string(raw.width()) + ", expected " + std::to_string(cfg.width));
        }
      }

      // Stage 1: normalization.
      const TraceImage norm = normalize_image(raw);

      // Stage 2: match and calibrate.
      const std::string input_id = in_path.stem().string();
      const Embedding query = extractor.embed(input_id, norm);
      const MatchResult match = match_ground_truth(norm, query, index);
      const DispersionField disp = dispersion_field(match.real_image, norm,
                                                    match.distance, cfg.calib);
      const TraceImage calibrated = calibrate(norm, match.real_image, disp, cfg.calib.lambda);
      outcome.match_id = match.sample_id;
      outcome.similarity = match.similarity;
      outcome.distance = match.distance;
      outcome.replaced_pixels = count_replacements(disp, cfg.calib.lambda);

      // Stage 3: decode and persist.
      char prefix[16];
      std::snprintf(prefix, sizeof(prefix), "in%03zu-", i);
      const std::string stem = prefix + input_id;
      outcome.trace_csv_path = (fs::path(cfg.output_dir) / (stem + ".trace.csv")).string();
      outcome.calibrated_png_path =
          (fs::path(cfg.output_dir) / (stem + ".calibrated.png")).string();
      {
        std::ofstream out(outcome.trace_csv_path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + outcome.trace_csv_path + "'");
        out << write_trace_text(decode_image(calibrated));
      }
      write_png(outcome.calibrated_png_path, calibrated);

      // Scoring against the matched real sample.
      const std::vector<TraceImage> synth_frames{calibrated};
      const std::vector<TraceImage> real_frames{match.real_image};
      outcome.pe = package_error(synth_frames, real_frames, weights);
      outcome.te = traffic_error(synth_frames, real_frames, weights);
      pe_values.push_back(outcome.pe);
      te_values.push_back(outcome.te);
      if (!extractor.is_external()) {
        raw_embeddings.push_back(query);
        calibrated_embeddings.push_back(extractor.embed_image(calibrated));
      }
      outcome.ok = true;
    } catch (const std::exception& e) {
      outcome.ok = false;
      outcome.error = e.what();
    }
    report.inputs.push_back(std::move(outcome));
  }

  if (!pe_values.empty()) {
    report.pe_harmonic_mean = harmonic_mean(pe_values);
    report.te_harmonic_mean = harmonic_mean(te_values);
  }
  if (!extractor.is_external() && raw_embeddings.size() >= 2 && corpus.size() >= 2) {
    std::vector<Embedding> corpus_embeddings;
    corpus_embeddings.reserve(index.entries().size());
    for (const CorpusEntry& e : index.entries()) corpus_embeddings.push_back(e.embedding);
    report.fd_raw = frechet_embedding_distance(raw_embeddings, corpus_embeddings);
    report.fd_calibrated = frechet_embedding_distance(calibrated_embeddings, corpus_embeddings);
  }

  std::ofstream out(cfg.report_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write report '" + cfg.report_path + "'");
  write_report_csv(out, report);
  return report;
}

}  // namespace tlpsynth
