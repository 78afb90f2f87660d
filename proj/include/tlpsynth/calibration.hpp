#pragma once

// Dispersion-based calibration: a weighted pixel distance field between the
// matched real image and the generated one, a per-pixel dispersion score that
// contrasts each generated pixel against its beta-weighted neighborhood, and
// a threshold gate that swaps flagged pixels for the real sample's pixels.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "tlpsynth/image.hpp"

namespace tlpsynth {

enum class ScaleVariant {
  literal,    // scale from the scalar embedding distance, constant per image
  per_pixel,  // scale from the normalized pixel distance at each position
};

enum class ScoreReduction { mean_abs, max_abs };

inline ScaleVariant parse_variant(std::string_view s) {
  if (s == "literal") return ScaleVariant::literal;
  if (s == "per_pixel") return ScaleVariant::per_pixel;
  throw Error("unknown variant '" + std::string(s) + "' (expected literal|per_pixel)");
}

inline const char* to_string(ScaleVariant v) {
  return v == ScaleVariant::literal ? "literal" : "per_pixel";
}

inline ScoreReduction parse_reduction(std::string_view s) {
  if (s == "mean_abs") return ScoreReduction::mean_abs;
  if (s == "max_abs") return ScoreReduction::max_abs;
  throw Error("unknown score reduction '" + std::string(s) + "' (expected mean_abs|max_abs)");
}

inline const char* to_string(ScoreReduction r) {
  return r == ScoreReduction::mean_abs ? "mean_abs" : "max_abs";
}

struct CalibrationParams {
  std::array<double, 3> alpha{1.0, 100.0, 10000.0};  // channel weights
  std::vector<double> beta{1.0 / 12, 1.0 / 6, 1.0 / 2, 1.0 / 6, 1.0 / 12};
  int radius = 2;                  // neighborhood B_n half-width
  double lambda = 1.0;             // acceptance threshold; 1 disables, 0 rejects
  double epsilon = 1e-9;           // guards every denominator
  ScaleVariant variant = ScaleVariant::literal;
  ScoreReduction reduction = ScoreReduction::mean_abs;

  void validate() const {
    for (double a : alpha) {
      if (!(a > 0.0) || !std::isfinite(a)) throw Error("alpha weights must be positive");
    }
    if (radius < 1) throw Error("radius must be >= 1");
    if (beta.size() != static_cast<std::size_t>(2 * radius + 1)) {
      throw Error("beta must have exactly 2*radius+1 = " + std::to_string(2 * radius + 1) +
                  " weights, got " + std::to_string(beta.size()));
    }
    for (double b : beta) {
      if (!(b > 0.0) || !std::isfinite(b)) throw Error("beta weights must be positive");
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("lambda must be in [0, 1]");
    if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
  }
};

inline double pixel_distance(const Rgb& x, const Rgb& y, const std::array<double, 3>& alpha) {
  return alpha[0] * std::abs(int(x.r) - y.r) + alpha[1] * std::abs(int(x.g) - y.g) +
         alpha[2] * std::abs(int(x.b) - y.b);
}

struct DistanceField {
  int width = 0;
  std::vector<double> values;  // row-major pixel distances
  double max_d = 0.0;
  double min_d = 0.0;
};

inline DistanceField distance_field(const TraceImage& real, const TraceImage& gen,
                                    const std::array<double, 3>& alpha) {
  require_same_size(real, gen, "distance_field");
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) throw Error("alpha weights must be positive");
  }
  DistanceField field;
  field.width = real.width();
  field.values.reserve(real.pixel_count());
  for (std::size_t i = 0; i < real.pixel_count(); ++i) {
    field.values.push_back(pixel_distance(real.pixels()[i], gen.pixels()[i], alpha));
  }
  field.max_d = field.values.empty() ? 0.0 : *std::max_element(field.values.begin(), field.values.end());
  field.min_d = field.values.empty() ? 0.0 : *std::min_element(field.values.begin(), field.values.end());
  return field;
}

struct DispersionField {
  int width = 0;
  std::vector<double> scores;                 // min-max normalized into [0, 1]
  std::vector<std::array<double, 3>> raw;     // per-channel dispersion vectors
};

/// Dispersion of the generated image against the matched real sample.
/// match_distance is the embedding-space distance recorded at match time;
/// the literal variant normalizes it by the pixel-distance extrema, the
/// per_pixel variant substitutes each position's own normalized distance.
inline DispersionField dispersion_field(const TraceImage& real, const TraceImage& gen,
                                        double match_distance, const CalibrationParams& params) {
  params.validate();
  require_same_size(real, gen, "dispersion_field");
  if (!std::isfinite(match_distance)) throw Error("match distance must be finite");
  if (real.width() < 1) throw Error("dispersion_field: empty image");

  const int w = real.width();
  const int n = params.radius;
  const DistanceField df = distance_field(real, gen, params.alpha);
  const double extent = df.max_d - df.min_d + params.epsilon;
  const double literal_scale = (match_distance - df.min_d) / extent;

  double beta_sum = 0.0;
  for (double b : params.beta) beta_sum += b;
  const double full_weight = beta_sum * beta_sum;  // separable kernel mass

  DispersionField out;
  out.width = w;
  out.raw.resize(gen.pixel_count());
  out.scores.resize(gen.pixel_count());

  for (int l = 0; l < w; ++l) {
    for (int m = 0; m < w; ++m) {
      // Clipped neighborhoods renormalize so every window carries the same
      // kernel mass; a uniform image then disperses identically everywhere.
      std::array<double, 3> weighted{0.0, 0.0, 0.0};
      double clip_weight = 0.0;
      for (int dl = -n; dl <= n; ++dl) {
        const int l0 = l + dl;
        if (l0 < 0 || l0 >= w) continue;
        const double wl = params.beta[static_cast<std::size_t>(dl + n)];
        for (int dm = -n; dm <= n; ++dm) {
          const int m0 = m + dm;
          if (m0 < 0 || m0 >= w) continue;
          const double weight = wl * params.beta[static_cast<std::size_t>(dm + n)];
          clip_weight += weight;
          const Rgb& q = gen(l0, m0);
          weighted[0] += weight * q.r;
          weighted[1] += weight * q.g;
          weighted[2] += weight * q.b;
        }
      }
      const double renorm = full_weight / clip_weight;
      std::array<double, 3> denom{params.epsilon + renorm * weighted[0],
                                  params.epsilon + renorm * weighted[1],
                                  params.epsilon + renorm * weighted[2]};
      const std::size_t idx = static_cast<std::size_t>(l) * w + m;
      const double scale = params.variant == ScaleVariant::literal
                               ? literal_scale
                               : (df.values[idx] - df.min_d) / extent;
      const Rgb& p = gen(l, m);
      auto& raw = out.raw[idx];
      raw = {scale * p.r / denom[0], scale * p.g / denom[1], scale * p.b / denom[2]};
      const std::array<double, 3> mag{std::abs(raw[0]), std::abs(raw[1]), std::abs(raw[2])};
      out.scores[idx] = params.reduction == ScoreReduction::mean_abs
                            ? (mag[0] + mag[1] + mag[2]) / 3.0
                            : std::max(mag[0], std::max(mag[1], mag[2]));
    }
  }

  // Min-max normalize; a constant plane maps to all zeros. Constancy is
  // judged with a relative window so rounding noise on a mathematically
  // uniform plane is not amplified into the full [0, 1] range.
  double lo = out.scores[0], hi = out.scores[0];
  for (double s : out.scores) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  const double span = hi - lo;
  if (span > 1e-12 * std::max(std::abs(lo), std::abs(hi))) {
    for (double& s : out.scores) s = std::min(1.0, std::max(0.0, (s - lo) / span));
  } else {
    for (double& s : out.scores) s = 0.0;
  }
  return out;
}

/// Pointwise gate: scores above lambda take the real pixel, everything else
/// keeps the generated one. The endpoints are exact by construction: 1 keeps
/// the generated image bit-for-bit, 0 returns the real sample bit-for-bit.
inline TraceImage calibrate(const TraceImage& gen, const TraceImage& real,
                            const DispersionField& disp, double lambda) {
  require_same_size(gen, real, "calibrate");
  if (disp.width != gen.width()) throw Error("calibrate: dispersion field dimensions differ");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("lambda must be in [0, 1]");
  if (lambda >= 1.0) return gen;
  if (lambda <= 0.0) return real;

  TraceImage out = gen;
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    if (disp.scores[i] > lambda) out.pixels()[i] = real.pixels()[i];
  }
  return out;
}

/// Number of pixels the gate takes from the real sample at this lambda.
inline std::size_t count_replacements(const DispersionField& disp, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("lambda must be in [0, 1]");
  if (lambda >= 1.0) return 0;
  if (lambda <= 0.0) return disp.scores.size();
  std::size_t count = 0;
  for (double s : disp.scores) {
    if (s > lambda) ++count;
  }
  return count;
}

}  // namespace tlpsynth
