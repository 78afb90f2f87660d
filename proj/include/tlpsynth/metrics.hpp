#pragma once

// Task-specific scoring. Frames are images; each frame is cut into m
// horizontal row bands ("segments"), so per-segment deltas measure traffic
// error over logical time. Package error weights TLP counts, traffic error
// weights byte totals. The Fréchet distance compares Gaussian fits of two
// embedding sets; it is a generic embedding-space metric, not Inception FID.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tlpsynth/codec.hpp"
#include "tlpsynth/extractors.hpp"
#include "tlpsynth/image.hpp"

namespace tlpsynth {

struct MetricWeights {
  int segments = 16;
  std::vector<double> w_seg;                    // per-segment, package error
  double w_t = 1.0;                             // totals / wrong-direction weight
  std::vector<std::array<double, 2>> w_seg_dir; // per-segment per-direction, traffic error
  std::array<double, 2> w_total_dir{1.0, 1.0};  // per-direction totals, traffic error

  static MetricWeights uniform(int m) {
    MetricWeights w;
    w.segments = m;
    w.w_seg.assign(static_cast<std::size_t>(m), 1.0);
    w.w_seg_dir.assign(static_cast<std::size_t>(m), {1.0, 1.0});
    return w;
  }

  void validate() const {
    if (segments < 1) throw Error("segments must be >= 1");
    if (w_seg.size() != static_cast<std::size_t>(segments) ||
        w_seg_dir.size() != static_cast<std::size_t>(segments)) {
      throw Error("weight vectors must have one entry per segment");
    }
    auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
    if (!positive(w_t) || !positive(w_total_dir[0]) || !positive(w_total_dir[1])) {
      throw Error("metric weights must be positive");
    }
    for (double v : w_seg) {
      if (!positive(v)) throw Error("metric weights must be positive");
    }
    for (const auto& pair : w_seg_dir) {
      if (!positive(pair[0]) || !positive(pair[1])) throw Error("metric weights must be positive");
    }
  }
};

enum class SegmentQuantity { count, bytes };

/// m x 2 aggregate of one frame: [segment][direction] -> TLP count or bytes.
using SegmentFrame = std::vector<std::array<std::int64_t, 2>>;

inline SegmentFrame segment_aggregate(const TraceImage& img, int m, SegmentQuantity quantity) {
  const int w = img.width();
  if (m < 1 || w % m != 0) {
    throw Error("segment count " + std::to_string(m) + " must divide image width " +
                std::to_string(w));
  }
  const int band_rows = w / m;
  SegmentFrame frame(static_cast<std::size_t>(m), {0, 0});
  for (int row = 0; row < w; ++row) {
    const int band = row / band_rows;
    for (int col = 0; col < w; ++col) {
      if (auto rec = decode_pixel(img(row, col))) {
        const int dir = rec->dir == Direction::rx ? 1 : 0;
        frame[band][dir] += quantity == SegmentQuantity::count ? 1 : rec->bytes;
      }
    }
  }
  return frame;
}

namespace metric_detail {

inline void check_frame_lists(std::span<const TraceImage> synth, std::span<const TraceImage> real) {
  if (synth.size() != real.size()) {
    throw Error("synthetic and real frame lists differ in length (" +
                std::to_string(synth.size()) + " vs " + std::to_string(real.size()) + ")");
  }
  for (std::size_t i = 0; i < synth.size(); ++i) {
    require_same_size(synth[i], real[i], "metric frames");
  }
}

}  // namespace metric_detail

/// Transmission package error: weighted absolute per-segment count deltas
/// plus per-direction totals, summed over frames.
inline double package_error(std::span<const TraceImage> synth, std::span<const TraceImage> real,
                            const MetricWeights& weights) {
  weights.validate();
  metric_detail::check_frame_lists(synth, real);
  const int m = weights.segments;
  double total = 0.0;
  for (std::size_t i = 0; i < synth.size(); ++i) {
    const SegmentFrame ds = segment_aggregate(synth[i], m, SegmentQuantity::count);
    const SegmentFrame dr = segment_aggregate(real[i], m, SegmentQuantity::count);
    double frame = 0.0;
    std::int64_t sum_tx = 0, sum_rx = 0;
    for (int j = 0; j < m; ++j) {
      const std::int64_t d_tx = ds[j][0] - dr[j][0];
      const std::int64_t d_rx = ds[j][1] - dr[j][1];
      frame += weights.w_seg[j] * (std::abs(double(d_tx)) + std::abs(double(d_rx)));
      sum_tx += d_tx;
      sum_rx += d_rx;
    }
    frame += weights.w_t * std::abs(double(sum_tx));
    frame += weights.w_t * std::abs(double(sum_rx));
    total += frame;
  }
  return total;
}

/// Transmission traffic error over byte totals. The display form carries both
/// the per-direction w_t sums and the per-segment direction weights; it is
/// evaluated exactly as written.
inline double traffic_error(std::span<const TraceImage> synth, std::span<const TraceImage> real,
                            const MetricWeights& weights) {
  weights.validate();
  metric_detail::check_frame_lists(synth, real);
  const int m = weights.segments;
  double total = 0.0;
  for (std::size_t i = 0; i < synth.size(); ++i) {
    const SegmentFrame ds = segment_aggregate(synth[i], m, SegmentQuantity::bytes);
    const SegmentFrame dr = segment_aggregate(real[i], m, SegmentQuantity::bytes);
    double frame = 0.0;
    double abs_tx = 0.0, abs_rx = 0.0;
    std::int64_t sum_tx = 0, sum_rx = 0;
    for (int j = 0; j < m; ++j) {
      const std::int64_t d_tx = ds[j][0] - dr[j][0];
      const std::int64_t d_rx = ds[j][1] - dr[j][1];
      frame += weights.w_seg_dir[j][0] * std::abs(double(d_tx));
      frame += weights.w_seg_dir[j][1] * std::abs(double(d_rx));
      abs_tx += std::abs(double(d_tx));
      abs_rx += std::abs(double(d_rx));
      sum_tx += d_tx;
      sum_rx += d_rx;
    }
    frame += weights.w_t * abs_tx;
    frame += weights.w_total_dir[0] * std::abs(double(sum_tx));
    frame += weights.w_total_dir[1] * std::abs(double(sum_rx));
    frame += weights.w_t * abs_rx;
    total += frame;
  }
  return total;
}

enum class FrechetMode { diagonal, full };

namespace metric_detail {

// Row-major square matrix, just enough for the Newton-Schulz square root.
struct Mat {
  std::size_t n = 0;
  std::vector<double> v;

  explicit Mat(std::size_t size) : n(size), v(size * size, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return v[r * n + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * n + c]; }

  static Mat identity(std::size_t size) {
    Mat m(size);
    for (std::size_t i = 0; i < size; ++i) m.at(i, i) = 1.0;
    return m;
  }
};

inline Mat multiply(const Mat& a, const Mat& b) {
  Mat out(a.n);
  for (std::size_t i = 0; i < a.n; ++i) {
    for (std::size_t k = 0; k < a.n; ++k) {
      const double aik = a.at(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < a.n; ++j) {
        out.at(i, j) += aik * b.at(k, j);
      }
    }
  }
  return out;
}

inline double frobenius(const Mat& m) {
  double sum = 0.0;
  for (double x : m.v) sum += x * x;
  return std::sqrt(sum);
}

// Symmetric PSD square root via the Newton-Schulz iteration, scaled so the
// spectrum falls inside [0, 1]. The 1e-6 residual bound is the guarantee;
// the quadratic iteration is allowed to run on to its numerical floor so
// self-distances stay near zero instead of inheriting the full tolerance.
inline Mat sqrt_psd(const Mat& m, double rel_residual = 1e-6, int max_iters = 200) {
  const double scale = frobenius(m);
  if (scale == 0.0) return Mat(m.n);
  Mat a(m.n);
  for (std::size_t i = 0; i < m.v.size(); ++i) a.v[i] = m.v[i] / scale;

  Mat y = a;
  Mat z = Mat::identity(m.n);
  const double root_scale = std::sqrt(scale);
  const double magnitude = std::max(1.0, frobenius(m));
  const double target = rel_residual * magnitude;
  const double floor = 1e-13 * magnitude;

  Mat best(m.n);
  double best_res = -1.0;
  for (int iter = 0; iter < max_iters; ++iter) {
    Mat result(m.n);
    for (std::size_t i = 0; i < m.v.size(); ++i) result.v[i] = y.v[i] * root_scale;
    Mat residual = multiply(result, result);
    for (std::size_t i = 0; i < m.v.size(); ++i) residual.v[i] -= m.v[i];
    const double res = frobenius(residual);
    if (best_res < 0.0 || res < best_res) {
      best = result;
      best_res = res;
    }
    if (best_res <= floor) break;
    // Past the guaranteed tolerance, stop once rounding ends the improvement.
    if (best_res <= target && res > best_res * 4.0) break;

    Mat zy = multiply(z, y);
    Mat p(m.n);
    for (std::size_t i = 0; i < m.n; ++i) {
      for (std::size_t j = 0; j < m.n; ++j) {
        p.at(i, j) = ((i == j ? 3.0 : 0.0) - zy.at(i, j)) * 0.5;
      }
    }
    y = multiply(y, p);
    z = multiply(p, z);
  }
  if (best_res < 0.0 || best_res > target) throw Error("matrix square root did not converge");
  return best;
}

}  // namespace metric_detail

/// Fréchet distance between Gaussian fits of two embedding sets. Population
/// covariance (divide by N). Diagonal mode keeps per-dimension variances;
/// full mode evaluates tr((S_a S_b)^1/2) via tr((S_a^1/2 S_b S_a^1/2)^1/2).
inline double frechet_embedding_distance(const std::vector<Embedding>& set_a,
                                         const std::vector<Embedding>& set_b,
                                         FrechetMode mode = FrechetMode::diagonal) {
  if (set_a.size() < 2 || set_b.size() < 2) {
    throw Error("Frechet distance needs at least 2 embeddings per set");
  }
  const std::size_t dim = set_a.front().values.size();
  for (const auto& set : {&set_a, &set_b}) {
    for (const Embedding& e : *set) {
      if (e.values.size() != dim) throw Error("Frechet distance: embedding dimensions differ");
    }
  }

  auto mean_of = [dim](const std::vector<Embedding>& set) {
    std::vector<double> mu(dim, 0.0);
    for (const Embedding& e : set) {
      for (std::size_t i = 0; i < dim; ++i) mu[i] += e.values[i];
    }
    for (double& v : mu) v /= static_cast<double>(set.size());
    return mu;
  };
  const std::vector<double> mu_a = mean_of(set_a);
  const std::vector<double> mu_b = mean_of(set_b);

  double mean_term = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double d = mu_a[i] - mu_b[i];
    mean_term += d * d;
  }

  if (mode == FrechetMode::diagonal) {
    auto variances = [dim](const std::vector<Embedding>& set, const std::vector<double>& mu) {
      std::vector<double> var(dim, 0.0);
      for (const Embedding& e : set) {
        for (std::size_t i = 0; i < dim; ++i) {
          const double d = e.values[i] - mu[i];
          var[i] += d * d;
        }
      }
      for (double& v : var) v /= static_cast<double>(set.size());
      return var;
    };
    const std::vector<double> va = variances(set_a, mu_a);
    const std::vector<double> vb = variances(set_b, mu_b);
    double trace_term = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = std::sqrt(va[i]) - std::sqrt(vb[i]);
      trace_term += d * d;
    }
    return std::max(0.0, mean_term + trace_term);
  }

  using metric_detail::Mat;
  auto covariance = [dim](const std::vector<Embedding>& set, const std::vector<double>& mu) {
    Mat cov(dim);
    for (const Embedding& e : set) {
      for (std::size_t i = 0; i < dim; ++i) {
        const double di = e.values[i] - mu[i];
        for (std::size_t j = 0; j < dim; ++j) {
          cov.at(i, j) += di * (e.values[j] - mu[j]);
        }
      }
    }
    for (double& v : cov.v) v /= static_cast<double>(set.size());
    return cov;
  };
  const Mat cov_a = covariance(set_a, mu_a);
  const Mat cov_b = covariance(set_b, mu_b);

  double trace_a = 0.0, trace_b = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    trace_a += cov_a.at(i, i);
    trace_b += cov_b.at(i, i);
  }

  const Mat root_a = metric_detail::sqrt_psd(cov_a);
  Mat inner = metric_detail::multiply(metric_detail::multiply(root_a, cov_b), root_a);
  // Resymmetrize against floating-point drift before the second root.
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i + 1; j < dim; ++j) {
      const double s = (inner.at(i, j) + inner.at(j, i)) / 2.0;
      inner.at(i, j) = s;
      inner.at(j, i) = s;
    }
  }
  const Mat cross = metric_detail::sqrt_psd(inner);
  double trace_cross = 0.0;
  for (std::size_t i = 0; i < dim; ++i) trace_cross += cross.at(i, i);

  return std::max(0.0, mean_term + trace_a + trace_b - 2.0 * trace_cross);
}

/// Harmonic mean used for batch reporting; any zero collapses the mean to 0.
inline double harmonic_mean(const std::vector<double>& values) {
  if (values.empty()) throw Error("harmonic mean of an empty set");
  double recip = 0.0;
  for (double v : values) {
    if (v < 0.0) throw Error("harmonic mean needs non-negative values");
    if (v == 0.0) return 0.0;
    recip += 1.0 / v;
  }
  return static_cast<double>(values.size()) / recip;
}

}  // namespace tlpsynth
