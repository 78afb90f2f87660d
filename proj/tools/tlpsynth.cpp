// Command-line front end. Every subcommand maps onto one library operation;
// data goes to stdout or files, diagnostics to stderr. Exit codes: 0 success,
// 1 domain error, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tlpsynth/tlpsynth.hpp"

namespace fs = std::filesystem;
using namespace tlpsynth;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

// Calibration/matching flags shared by `calibrate` and exposed on `pipeline`.
struct CalibFlags {
  std::string alpha;
  std::string beta;
  int radius = -1;
  std::string lambda;
  std::string epsilon;
  std::string variant;
  std::string reduction;

  void attach(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "channel weights a1,a2,a3");
    cmd->add_option("--beta", beta, "neighborhood kernel, rationals like 1/12,1/6,1/2,1/6,1/12");
    cmd->add_option("--radius", radius, "neighborhood radius n");
    cmd->add_option("--lambda", lambda, "acceptance threshold in [0,1]");
    cmd->add_option("--epsilon", epsilon, "denominator guard");
    cmd->add_option("--variant", variant, "dispersion scale variant: literal|per_pixel");
    cmd->add_option("--reduction", reduction, "score reduction: mean_abs|max_abs");
  }

  CalibrationParams resolve() const {
    CalibrationParams p;
    if (!alpha.empty()) {
      const auto vals = parse_rational_list(alpha);
      if (vals.size() != 3) throw Error("alpha needs exactly 3 weights");
      p.alpha = {vals[0], vals[1], vals[2]};
    }
    if (!beta.empty()) p.beta = parse_rational_list(beta);
    if (radius >= 0) p.radius = radius;
    if (!lambda.empty()) p.lambda = parse_rational(lambda);
    if (!epsilon.empty()) p.epsilon = parse_rational(epsilon);
    if (!variant.empty()) p.variant = parse_variant(variant);
    if (!reduction.empty()) p.reduction = parse_reduction(reduction);
    p.validate();
    return p;
  }
};

std::vector<std::string> split_paths(const std::string& joined) {
  std::vector<std::string> out;
  for (std::string_view tok : detail::split(joined, ',')) {
    if (!tok.empty()) out.emplace_back(tok);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PCIe TLP trace synthesis and calibration toolkit"};
  app.require_subcommand(1);

  // encode
  auto* enc = app.add_subcommand("encode", "Encode a trace CSV into a PNG image");
  std::string enc_in, enc_out;
  int enc_width = kDefaultWidth;
  enc->add_option("--in", enc_in, "trace CSV")->required();
  enc->add_option("--out", enc_out, "output PNG")->required();
  enc->add_option("--width", enc_width, "image side W");
  enc->callback([&] {
    write_png(enc_out, encode_trace(parse_trace_text(slurp(enc_in), enc_in), enc_width));
  });

  // decode
  auto* dec = app.add_subcommand("decode", "Decode a PNG image back into a trace CSV");
  std::string dec_in, dec_out = "-";
  dec->add_option("--in", dec_in, "input PNG")->required();
  dec->add_option("--out", dec_out, "output CSV ('-' for stdout)");
  dec->callback([&] {
    const std::string text = write_trace_text(decode_image(read_png(dec_in)));
    if (dec_out == "-") {
      std::cout << text;
    } else {
      write_text(dec_out, text);
    }
  });

  // normalize
  auto* norm = app.add_subcommand("normalize", "Snap the direction channel of a raw image");
  std::string norm_in, norm_out;
  norm->add_option("--in", norm_in, "input PNG")->required();
  norm->add_option("--out", norm_out, "output PNG")->required();
  norm->callback([&] { write_png(norm_out, normalize_image(read_png(norm_in))); });

  // generate
  auto* gen = app.add_subcommand("generate", "Generate traces: random baseline or NIC workload");
  std::string gen_kind, gen_out;
  std::uint64_t gen_seed = 0;
  std::size_t gen_length = 1024;
  int gen_images = 0;
  int gen_width = kDefaultWidth;
  bool gen_validate = false;
  NicWorkloadConfig nic;
  gen->add_option("--kind", gen_kind, "random|nic")->required();
  gen->add_option("--seed", gen_seed, "PRNG seed");
  gen->add_option("--length", gen_length, "record count (random)");
  gen->add_option("--transfers", nic.n_transfers, "transfer count (nic)");
  gen->add_option("--mtu", nic.mtu, "payload upper bound (nic)");
  gen->add_option("--max-payload", nic.max_payload, "TLP payload cap (nic)");
  gen->add_option("--doorbell-bytes", nic.doorbell_bytes, "doorbell TLP size (nic)");
  gen->add_option("--descriptor-bytes", nic.descriptor_bytes, "descriptor TLP size (nic)");
  gen->add_option("--msi-bytes", nic.msi_bytes, "MSI TLP size (nic)");
  gen->add_option("--rx-fraction", nic.rx_fraction, "probability of an RX transfer (nic)");
  gen->add_option("--images", gen_images, "emit a corpus of N images into --out DIR (nic)");
  gen->add_option("--width", gen_width, "image side W for PNG output");
  gen->add_flag("--validate", gen_validate, "audit nic output against the transfer template");
  gen->add_option("--out", gen_out, "output .csv, .png, or directory (corpus mode)")->required();
  gen->callback([&] {
    nic.seed = gen_seed;
    if (gen_images > 0) {
      if (gen_kind != "nic") throw Error("corpus mode (--images) requires --kind nic");
      fs::create_directories(gen_out);
      for (const auto& [id, img] : make_corpus(nic, gen_images, gen_width)) {
        write_png((fs::path(gen_out) / (id + ".png")).string(), img);
      }
      return;
    }
    Trace trace;
    if (gen_kind == "random") {
      trace = random_trace(gen_seed, gen_length);
    } else if (gen_kind == "nic") {
      trace = nic_workload_trace(nic);
      if (gen_validate) {
        if (auto issue = validate_workload_trace(trace, nic)) throw Error(*issue);
      }
    } else {
      throw Error("unknown generator kind '" + gen_kind + "' (expected random|nic)");
    }
    const std::string ext = fs::path(gen_out).extension().string();
    if (ext == ".png") {
      write_png(gen_out, encode_trace(trace, gen_width));
    } else if (ext == ".csv") {
      write_text(gen_out, write_trace_text(trace));
    } else {
      throw Error("--out must end in .csv or .png (or pass --images for a corpus)");
    }
  });

  // index
  auto* idx = app.add_subcommand("index", "Extract corpus embeddings into an embedding CSV");
  std::string idx_corpus, idx_extractor = "naive", idx_out;
  int idx_width = kDefaultWidth;
  idx->add_option("--corpus", idx_corpus, "corpus directory of PNGs")->required();
  idx->add_option("--extractor", idx_extractor, "naive|histogram");
  idx->add_option("--width", idx_width, "image side W");
  idx->add_option("--out", idx_out, "output embedding CSV ('-' for stdout)")->required();
  idx->callback([&] {
    const Extractor extractor = Extractor::from_id(idx_extractor);
    std::string out;
    for (const auto& [id, img] : load_corpus_dir(idx_corpus, idx_width)) {
      out += id;
      for (double v : extractor.embed(id, img).values) {
        out += ',';
        out += format_double(v);
      }
      out += '\n';
    }
    if (idx_out == "-") {
      std::cout << out;
    } else {
      write_text(idx_out, out);
    }
  });

  // match
  auto* mat = app.add_subcommand("match", "Find the most similar corpus sample");
  std::string mat_in, mat_corpus, mat_extractor = "naive", mat_similarity = "cosine";
  int mat_width = kDefaultWidth;
  mat->add_option("--in", mat_in, "query PNG")->required();
  mat->add_option("--corpus", mat_corpus, "corpus directory")->required();
  mat->add_option("--extractor", mat_extractor, "naive|histogram|external:PATH");
  mat->add_option("--similarity", mat_similarity, "cosine|psnr");
  mat->add_option("--width", mat_width, "image side W");
  mat->callback([&] {
    const Extractor extractor = Extractor::from_id(mat_extractor);
    const CorpusIndex index = build_corpus_index(load_corpus_dir(mat_corpus, mat_width),
                                                 extractor, parse_similarity(mat_similarity));
    const TraceImage query = read_png(mat_in);  // matched as given; normalize separately
    const Embedding emb = extractor.embed(fs::path(mat_in).stem().string(), query);
    const MatchResult m = match_ground_truth(query, emb, index);
    std::cout << mat_in << ',' << m.sample_id << ',' << format_double(m.similarity) << ','
              << format_double(m.distance) << "\n";
  });

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Dispersion-calibrate a generated image");
  std::string cal_gen, cal_corpus, cal_out, cal_extractor = "naive", cal_similarity = "cosine";
  int cal_width = kDefaultWidth;
  CalibFlags cal_flags;
  cal->add_option("--gen", cal_gen, "generated PNG")->required();
  cal->add_option("--corpus", cal_corpus, "corpus directory")->required();
  cal->add_option("--out", cal_out, "calibrated PNG")->required();
  cal->add_option("--extractor", cal_extractor, "naive|histogram|external:PATH");
  cal->add_option("--similarity", cal_similarity, "cosine|psnr");
  cal->add_option("--width", cal_width, "image side W");
  cal_flags.attach(cal);
  cal->callback([&] {
    const CalibrationParams params = cal_flags.resolve();
    const Extractor extractor = Extractor::from_id(cal_extractor);
    const CorpusIndex index = build_corpus_index(load_corpus_dir(cal_corpus, cal_width),
                                                 extractor, parse_similarity(cal_similarity));
    // The input is taken as already normalized, keeping lambda=1 an exact
    // identity; chain `normalize` first (or use `pipeline`) for raw output.
    const TraceImage gen = read_png(cal_gen);
    if (gen.width() != cal_width) {
      throw Error("input is " + std::to_string(gen.width()) + "x" +
                  std::to_string(gen.width()) + ", expected " + std::to_string(cal_width));
    }
    const Embedding emb = extractor.embed(fs::path(cal_gen).stem().string(), gen);
    const MatchResult m = match_ground_truth(gen, emb, index);
    const DispersionField disp = dispersion_field(m.real_image, gen, m.distance, params);
    write_png(cal_out, calibrate(gen, m.real_image, disp, params.lambda));
    std::cout << cal_gen << ',' << m.sample_id << ',' << format_double(m.similarity) << ','
              << count_replacements(disp, params.lambda) << "\n";
  });

  // metrics
  auto* met = app.add_subcommand("metrics", "Score synthetic frames against real ones");
  std::string met_synth, met_real, met_kind, met_extractor = "naive";
  int met_segments = 16;
  double met_wt = 1.0;
  met->add_option("--synth", met_synth, "synthetic PNG(s), comma separated")->required();
  met->add_option("--real", met_real, "real PNG(s), comma separated")->required();
  met->add_option("--kind", met_kind, "pe|te|fd")->required();
  met->add_option("--segments", met_segments, "row bands per frame (pe/te)");
  met->add_option("--w-t", met_wt, "totals weight (pe/te)");
  met->add_option("--extractor", met_extractor, "embedding source for fd");
  met->callback([&] {
    std::vector<TraceImage> synth, real;
    for (const std::string& p : split_paths(met_synth)) synth.push_back(read_png(p));
    for (const std::string& p : split_paths(met_real)) real.push_back(read_png(p));
    if (met_kind == "pe" || met_kind == "te") {
      MetricWeights weights = MetricWeights::uniform(met_segments);
      weights.w_t = met_wt;
      const double value = met_kind == "pe" ? package_error(synth, real, weights)
                                            : traffic_error(synth, real, weights);
      std::cout << met_kind << ',' << format_double(value) << ",,,," << synth.size() << "\n";
    } else if (met_kind == "fd") {
      const Extractor extractor = Extractor::from_id(met_extractor);
      auto embed_all = [&](const std::vector<TraceImage>& imgs) {
        std::vector<Embedding> out;
        for (const TraceImage& img : imgs) out.push_back(extractor.embed_image(img));
        return out;
      };
      const double value = frechet_embedding_distance(embed_all(synth), embed_all(real));
      std::cout << "fd," << format_double(value) << ',' << extractor.id() << ",,,"
                << synth.size() << "\n";
    } else {
      throw Error("unknown metric kind '" + met_kind + "' (expected pe|te|fd)");
    }
  });

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Run the full normalize/calibrate/decode pipeline");
  std::string pipe_config, pipe_inputs, pipe_corpus, pipe_out, pipe_report;
  std::string pipe_extractor, pipe_similarity, pipe_kind;
  int pipe_width = 0, pipe_segments = 0;
  CalibFlags pipe_flags;
  pipe->add_option("--config", pipe_config, "key = value config file");
  pipe->add_option("--inputs", pipe_inputs, "input paths, comma separated");
  pipe->add_option("--input-kind", pipe_kind, "text|image|auto");
  pipe->add_option("--corpus", pipe_corpus, "corpus directory");
  pipe->add_option("--out", pipe_out, "output directory");
  pipe->add_option("--report", pipe_report, "report CSV path");
  pipe->add_option("--width", pipe_width, "image side W");
  pipe->add_option("--segments", pipe_segments, "row bands per frame");
  pipe->add_option("--extractor", pipe_extractor, "naive|histogram|external:PATH");
  pipe->add_option("--similarity", pipe_similarity, "cosine|psnr");
  pipe_flags.attach(pipe);
  pipe->callback([&] {
    PipelineConfig cfg;
    if (!pipe_config.empty()) apply_config_file(cfg, pipe_config);
    // CLI flags override file values.
    if (!pipe_inputs.empty()) set_config_value(cfg, "inputs", pipe_inputs);
    if (!pipe_kind.empty()) set_config_value(cfg, "input_kind", pipe_kind);
    if (!pipe_corpus.empty()) set_config_value(cfg, "corpus_dir", pipe_corpus);
    if (!pipe_out.empty()) set_config_value(cfg, "output_dir", pipe_out);
    if (!pipe_report.empty()) set_config_value(cfg, "report", pipe_report);
    if (pipe_width > 0) set_config_value(cfg, "width", std::to_string(pipe_width));
    if (pipe_segments > 0) set_config_value(cfg, "segments", std::to_string(pipe_segments));
    if (!pipe_extractor.empty()) set_config_value(cfg, "extractor", pipe_extractor);
    if (!pipe_similarity.empty()) set_config_value(cfg, "similarity", pipe_similarity);
    if (!pipe_flags.alpha.empty()) set_config_value(cfg, "alpha", pipe_flags.alpha);
    if (!pipe_flags.beta.empty()) set_config_value(cfg, "beta", pipe_flags.beta);
    if (pipe_flags.radius >= 0) set_config_value(cfg, "radius", std::to_string(pipe_flags.radius));
    if (!pipe_flags.lambda.empty()) set_config_value(cfg, "lambda", pipe_flags.lambda);
    if (!pipe_flags.epsilon.empty()) set_config_value(cfg, "epsilon", pipe_flags.epsilon);
    if (!pipe_flags.variant.empty()) set_config_value(cfg, "variant", pipe_flags.variant);
    if (!pipe_flags.reduction.empty()) {
      set_config_value(cfg, "score_reduction", pipe_flags.reduction);
    }

    const PipelineReport report = run_pipeline(cfg);
    write_report_csv(std::cout, report);
    std::size_t failed = 0;
    for (const auto& r : report.inputs) {
      if (!r.ok) ++failed;
    }
    if (failed > 0) {
      std::cerr << failed << " of " << report.inputs.size() << " inputs failed; see report\n";
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
