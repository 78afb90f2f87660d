#include "tlpsynth/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "tlpsynth/codec.hpp"
#include "tlpsynth/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace tlpsynth;

namespace {

Embedding emb(std::vector<double> v) { return Embedding{std::move(v), "test"}; }

TraceImage image_with(std::initializer_list<std::pair<int, TlpRecord>> placed, int w) {
  TraceImage img(w);
  for (const auto& [pos, rec] : placed) {
    img.pixels()[static_cast<std::size_t>(pos)] = encode_record(rec);
  }
  return img;
}

// Random images biased toward padding so aggregates vary across segments.
TraceImage sparse_random_image(SplitMix64& rng, int w) {
  TraceImage img(w);
  for (Rgb& p : img.pixels()) {
    if (rng.bounded(3) == 0) {
      TlpRecord rec;
      rec.bytes = rng.uniform_int(1, 65535);
      rec.dir = rng.bounded(2) ? Direction::rx : Direction::tx;
      p = encode_record(rec);
    }
  }
  return img;
}

}  // namespace

TEST(SegmentAggregate, AllBlackIsZero) {
  const SegmentFrame f = segment_aggregate(TraceImage(8), 4, SegmentQuantity::count);
  for (const auto& cell : f) {
    EXPECT_EQ(cell[0], 0);
    EXPECT_EQ(cell[1], 0);
  }
}

TEST(SegmentAggregate, SingleRecordCountAndBytes) {
  const TraceImage img = image_with({{1, TlpRecord{300, Direction::tx}}}, 8);
  const SegmentFrame counts = segment_aggregate(img, 4, SegmentQuantity::count);
  const SegmentFrame bytes = segment_aggregate(img, 4, SegmentQuantity::bytes);
  EXPECT_EQ(counts[0][0], 1);
  EXPECT_EQ(counts[0][1], 0);
  EXPECT_EQ(bytes[0][0], 300);
  for (int j = 1; j < 4; ++j) {
    EXPECT_EQ(counts[j][0] + counts[j][1], 0);
    EXPECT_EQ(bytes[j][0] + bytes[j][1], 0);
  }
}

TEST(SegmentAggregate, BandPartition) {
  // W=8, m=4: bands of 2 rows; a record in row 5 lands in band 2.
  const TraceImage img = image_with({{5 * 8 + 3, TlpRecord{64, Direction::rx}}}, 8);
  const SegmentFrame counts = segment_aggregate(img, 4, SegmentQuantity::count);
  EXPECT_EQ(counts[2][1], 1);
}

TEST(SegmentAggregate, RejectsNonDividingSegments) {
  EXPECT_THROW(segment_aggregate(TraceImage(8), 3, SegmentQuantity::count), Error);
  EXPECT_THROW(segment_aggregate(TraceImage(8), 0, SegmentQuantity::count), Error);
}

TEST(PackageError, IdenticalFramesScoreZero) {
  SplitMix64 rng(50);
  const TraceImage img = sparse_random_image(rng, 8);
  const std::vector<TraceImage> frames{img, img};
  EXPECT_EQ(package_error(frames, frames, MetricWeights::uniform(4)), 0.0);
}

TEST(PackageError, OneExtraPacketUnitWeights) {
  // Segment 3 of a W=8/m=4 frame covers rows 6..7.
  const TraceImage real(8);
  const TraceImage synth = image_with({{6 * 8, TlpRecord{500, Direction::tx}}}, 8);
  const std::vector<TraceImage> s{synth}, r{real};
  EXPECT_DOUBLE_EQ(package_error(s, r, MetricWeights::uniform(4)), 2.0);
}

TEST(PackageError, ScalesLinearlyInSingleWeight) {
  const TraceImage real(8);
  const TraceImage synth = image_with({{0, TlpRecord{500, Direction::tx}}}, 8);
  const std::vector<TraceImage> s{synth}, r{real};
  MetricWeights w = MetricWeights::uniform(4);
  const double base = package_error(s, r, w);
  w.w_seg[0] *= 5.0;
  EXPECT_DOUBLE_EQ(package_error(s, r, w), base + 4.0);  // w_0 delta of 4 on |d|=1
}

TEST(PackageError, MatchesOracleOnRandomPairs) {
  SplitMix64 rng(51);
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<TraceImage> synth, real;
    const int frames = 1 + static_cast<int>(rng.bounded(3));
    for (int i = 0; i < frames; ++i) {
      synth.push_back(sparse_random_image(rng, 8));
      real.push_back(sparse_random_image(rng, 8));
    }
    MetricWeights w = MetricWeights::uniform(4);
    for (auto& v : w.w_seg) v = 0.1 + rng.uniform01() * 4;
    w.w_t = 0.1 + rng.uniform01() * 4;
    const double got = package_error(synth, real, w);
    const double want = oracle::package_error_oracle(synth, real, w);
    EXPECT_TRUE(oracle::close_rel(got, want)) << got << " vs " << want;
  }
}

TEST(PackageError, PermutationInvariantWithinSegment) {
  SplitMix64 rng(52);
  TraceImage synth = sparse_random_image(rng, 8);
  const TraceImage real = sparse_random_image(rng, 8);
  const std::vector<TraceImage> r{real};
  MetricWeights w = MetricWeights::uniform(4);
  const double before = package_error(std::vector<TraceImage>{synth}, r, w);
  // Swap two pixels inside band 1 (rows 2..3).
  std::swap(synth.pixels()[2 * 8 + 1], synth.pixels()[3 * 8 + 6]);
  EXPECT_DOUBLE_EQ(package_error(std::vector<TraceImage>{synth}, r, w), before);
}

TEST(PackageError, LengthMismatchRejected) {
  const std::vector<TraceImage> one{TraceImage(8)}, two{TraceImage(8), TraceImage(8)};
  EXPECT_THROW(package_error(one, two, MetricWeights::uniform(4)), Error);
}

TEST(TrafficError, IdenticalFramesScoreZero) {
  SplitMix64 rng(53);
  const TraceImage img = sparse_random_image(rng, 8);
  const std::vector<TraceImage> frames{img};
  EXPECT_EQ(traffic_error(frames, frames, MetricWeights::uniform(4)), 0.0);
}

TEST(TrafficError, SingleRxSurplusUnitWeights) {
  // 100 surplus RX bytes in segment 0: w_{0,1}*100 + w_total_rx*100 + w_t*100.
  const TraceImage real(8);
  const TraceImage synth = image_with({{0, TlpRecord{100, Direction::rx}}}, 8);
  EXPECT_DOUBLE_EQ(traffic_error(std::vector<TraceImage>{synth}, std::vector<TraceImage>{real},
                                 MetricWeights::uniform(4)),
                   300.0);
}

TEST(TrafficError, ScalesLinearlyInSingleWeight) {
  const TraceImage real(8);
  const TraceImage synth = image_with({{0, TlpRecord{100, Direction::rx}}}, 8);
  const std::vector<TraceImage> s{synth}, r{real};
  MetricWeights w = MetricWeights::uniform(4);
  w.w_t = 2.0;  // doubles only its own term: 100 + 200 + 100
  EXPECT_DOUBLE_EQ(traffic_error(s, r, w), 400.0);
  w = MetricWeights::uniform(4);
  w.w_total_dir[1] = 3.0;
  EXPECT_DOUBLE_EQ(traffic_error(s, r, w), 500.0);
}

TEST(TrafficError, MatchesOracleOnRandomPairs) {
  SplitMix64 rng(54);
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<TraceImage> synth{sparse_random_image(rng, 8)};
    std::vector<TraceImage> real{sparse_random_image(rng, 8)};
    MetricWeights w = MetricWeights::uniform(8);
    for (auto& v : w.w_seg) v = 0.1 + rng.uniform01() * 4;
    for (auto& pair : w.w_seg_dir) {
      pair[0] = 0.1 + rng.uniform01() * 4;
      pair[1] = 0.1 + rng.uniform01() * 4;
    }
    w.w_t = 0.1 + rng.uniform01() * 4;
    w.w_total_dir = {0.1 + rng.uniform01() * 4, 0.1 + rng.uniform01() * 4};
    const double got = traffic_error(synth, real, w);
    const double want = oracle::traffic_error_oracle(synth, real, w);
    EXPECT_TRUE(oracle::close_rel(got, want)) << got << " vs " << want;
  }
}

TEST(Frechet, IdenticalSetsAreZero) {
  SplitMix64 rng(60);
  std::vector<Embedding> set;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> v(4);
    for (double& x : v) x = rng.uniform01() * 10;
    set.push_back(emb(std::move(v)));
  }
  EXPECT_LE(frechet_embedding_distance(set, set, FrechetMode::diagonal), 1e-9);
  EXPECT_LE(frechet_embedding_distance(set, set, FrechetMode::full), 1e-9);
}

TEST(Frechet, MeanShiftWithEqualCovariance) {
  // Equal diagonal covariances cancel; distance reduces to the mean gap.
  std::vector<Embedding> a{emb({0, 0}), emb({2, 0}), emb({0, 2}), emb({2, 2})};
  std::vector<Embedding> b;
  for (const Embedding& e : a) b.push_back(emb({e.values[0] + 3, e.values[1] - 1}));
  EXPECT_NEAR(frechet_embedding_distance(a, b, FrechetMode::diagonal), 9.0 + 1.0, 1e-9);
  EXPECT_NEAR(frechet_embedding_distance(a, b, FrechetMode::full), 10.0, 1e-5);
}

TEST(Frechet, HandComputedOneDimensional) {
  // {0,2} vs {1,3}: means 1 and 2, population variances 1 and 1 -> distance 1.
  const std::vector<Embedding> a{emb({0}), emb({2})};
  const std::vector<Embedding> b{emb({1}), emb({3})};
  EXPECT_NEAR(frechet_embedding_distance(a, b, FrechetMode::diagonal), 1.0, 1e-9);
  EXPECT_NEAR(frechet_embedding_distance(a, b, FrechetMode::full), 1.0, 1e-6);
}

TEST(Frechet, SymmetricInDiagonalMode) {
  SplitMix64 rng(61);
  std::vector<Embedding> a, b;
  for (int i = 0; i < 6; ++i) {
    std::vector<double> va(3), vb(3);
    for (double& x : va) x = rng.uniform01() * 5;
    for (double& x : vb) x = rng.uniform01() * 5;
    a.push_back(emb(std::move(va)));
    b.push_back(emb(std::move(vb)));
  }
  EXPECT_NEAR(frechet_embedding_distance(a, b), frechet_embedding_distance(b, a), 1e-9);
}

TEST(Frechet, FullModeKnownMatrixRoot) {
  // Cov A = [[2,1],[1,2]] (eigen 1,3), Cov B = I. tr sqrt(A*I) = 1 + sqrt(3),
  // FD = 0 + tr(A) + tr(I) - 2(1 + sqrt 3) = 4 - 2 sqrt 3.
  // Sample with mean zero and population covariance exactly A:
  // points (±1, ±1) give cov [[1? ...]] — instead use 4 points engineered below.
  const double s2 = std::sqrt(2.0);
  std::vector<Embedding> a{emb({s2, s2}), emb({-s2, -s2}), emb({1, -1}), emb({-1, 1})};
  // mean 0; cov = 1/4 * (2*[[2,2],[2,2]]? recompute: sum x0^2 = 2+2+1+1 = 6 -> var 1.5
  // cross: 2+2-1-1 = 2 -> 0.5. So A = [[1.5, .5],[.5, 1.5]], eigen 1, 2.
  std::vector<Embedding> b{emb({1, 0}), emb({-1, 0}), emb({0, 1}), emb({0, -1})};
  // B: var 0.5 each, cross 0 -> B = 0.5 I.
  // tr sqrt(A B) = sqrt(0.5) * (sqrt 1 + sqrt 2); FD = tr A + tr B - 2 that.
  const double expected = 3.0 + 1.0 - 2.0 * std::sqrt(0.5) * (1.0 + std::sqrt(2.0));
  EXPECT_NEAR(frechet_embedding_distance(a, b, FrechetMode::full), expected, 1e-5);
}

TEST(Frechet, Errors) {
  const std::vector<Embedding> one{emb({1, 2})};
  const std::vector<Embedding> two{emb({1, 2}), emb({3, 4})};
  const std::vector<Embedding> wrong{emb({1}), emb({2})};
  EXPECT_THROW(frechet_embedding_distance(one, two), Error);
  EXPECT_THROW(frechet_embedding_distance(two, wrong), Error);
}

TEST(HarmonicMean, KnownValuesAndZeroCollapse) {
  EXPECT_DOUBLE_EQ(harmonic_mean({2.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(harmonic_mean({1.0, 2.0, 4.0}), 3.0 / (1.0 + 0.5 + 0.25));
  EXPECT_EQ(harmonic_mean({3.0, 0.0}), 0.0);
  EXPECT_THROW(harmonic_mean({}), Error);
}

TEST(MetricWeights, ValidationCatchesBadShapes) {
  MetricWeights w = MetricWeights::uniform(4);
  w.w_seg.pop_back();
  EXPECT_THROW(w.validate(), Error);
  w = MetricWeights::uniform(4);
  w.w_t = 0.0;
  EXPECT_THROW(w.validate(), Error);
}
