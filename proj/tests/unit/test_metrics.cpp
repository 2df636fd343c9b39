#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rbin/metrics.hpp"

using namespace rbin;

namespace {

BinaryImage square(std::size_t m, std::size_t n, std::size_t i0, std::size_t i1, std::size_t j0, std::size_t j1) {
  BinaryImage b(m, n);
  for (std::size_t i = i0; i < i1; ++i)
    for (std::size_t j = j0; j < j1; ++j) b.set(i, j, true);
  return b;
}

}  // namespace

TEST(FMeasure, Examples) {
  const BinaryImage gt = square(10, 10, 2, 6, 2, 6);
  EXPECT_EQ(f_measure(gt, gt).fm, 1.0);
  EXPECT_EQ(f_measure(BinaryImage(10, 10), gt).fm, 0.0);
  EXPECT_EQ(f_measure(BinaryImage(10, 10), gt).rc, 0.0);

  // TP = 8, FP = 2, FN = 2
  BinaryImage g(5, 5), p(5, 5);
  for (std::size_t k = 0; k < 10; ++k) g.set(k / 5, k % 5, true);
  for (std::size_t k = 2; k < 12; ++k) p.set(k / 5, k % 5, true);
  const FMeasure f = f_measure(p, g);
  EXPECT_DOUBLE_EQ(f.rc, 0.8);
  EXPECT_DOUBLE_EQ(f.pr, 0.8);
  EXPECT_DOUBLE_EQ(f.fm, 0.8);

  EXPECT_THROW(f_measure(gt, BinaryImage(10, 10)), UndefinedMetricError);
  EXPECT_THROW(f_measure(BinaryImage(3, 3), BinaryImage(3, 4)), DimensionError);
}

TEST(Psnr, Examples) {
  const BinaryImage gt = square(100, 100, 10, 20, 10, 20);
  EXPECT_EQ(psnr(gt, gt), kPsnrCap);
  BinaryImage one = gt;
  one.set(50, 50, true);
  EXPECT_NEAR(psnr(one, gt), 40.0, 1e-12);
  const BinaryImage quarter = square(100, 100, 0, 50, 0, 50);
  EXPECT_NEAR(psnr(quarter, BinaryImage(100, 100)), 10 * std::log10(4.0), 1e-12);
}

TEST(Mpm, Examples) {
  const BinaryImage gt = square(12, 12, 4, 8, 4, 8);
  EXPECT_EQ(mpm(gt, gt), 0.0);

  const Matrix d = oracle::brute_distance(oracle::brute_contour(gt));
  double total = 0;
  for (double x : d.values()) total += x;
  BinaryImage p = gt;
  p.set(3, 5, true);  // directly above a contour pixel
  EXPECT_NEAR(mpm(p, gt), 1.0 / (2 * total), 1e-15);
  EXPECT_THROW(mpm(gt, BinaryImage(12, 12)), UndefinedMetricError);
}

TEST(Drd, Examples) {
  const BinaryImage gt = square(24, 24, 0, 24, 0, 16);
  ASSERT_EQ(non_uniform_blocks(gt), 0u);
  EXPECT_THROW(drd(gt, gt), UndefinedMetricError);

  // one flip deep in a big foreground region: every neighbour disagrees
  const BinaryImage big = square(32, 32, 0, 32, 0, 20);
  BinaryImage p = big;
  p.set(10, 8, false);
  EXPECT_EQ(drd(big, big), 0.0);
  const auto w = drd_weights();
  double sum = 0;
  for (const auto& row : w)
    for (double x : row) sum += x;
  EXPECT_NEAR(sum, 1.0, 1e-15);
  EXPECT_EQ(w[2][2], 0.0);
  EXPECT_NEAR(w[2][1] / w[0][0], std::sqrt(8.0), 1e-12);
  EXPECT_NEAR(drd(p, big), sum / double(non_uniform_blocks(big)), 1e-15);
  // partial edge blocks count: 12x12 has four blocks, three of them partial
  EXPECT_EQ(non_uniform_blocks(square(12, 12, 6, 10, 6, 10)), 4u);
}

TEST(PseudoFMeasure, Examples) {
  const BinaryImage gt = square(20, 20, 5, 15, 5, 15);
  EXPECT_EQ(pseudo_f_measure(gt, gt), 1.0);
  EXPECT_EQ(pseudo_f_measure(BinaryImage(20, 20), gt), 0.0);

  // same number of false positives, near versus far
  BinaryImage near = gt, far = gt;
  for (std::size_t j = 5; j < 15; ++j) near.set(4, j, true);
  for (std::size_t j = 5; j < 15; ++j) far.set(0, j, true);
  EXPECT_EQ(confusion(near, gt).fp, confusion(far, gt).fp);
  EXPECT_EQ(f_measure(near, gt).fm, f_measure(far, gt).fm);
  EXPECT_GT(pseudo_f_measure(near, gt), pseudo_f_measure(far, gt));
  EXPECT_THROW(pseudo_f_measure(gt, BinaryImage(20, 20)), UndefinedMetricError);
}

TEST(DistanceTransform, MatchesBruteForce) {
  std::mt19937_64 rng(1);
  for (double p : {0.01, 0.1, 0.5}) {
    for (auto [m, n] : {std::pair{16, 16}, std::pair{7, 23}, std::pair{1, 9}}) {
      const BinaryImage s = oracle::random_mask(rng, std::size_t(m), std::size_t(n), p);
      const Matrix a = distance_transform(s), b = oracle::brute_distance(s);
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (std::isinf(b.values()[k])) EXPECT_TRUE(std::isinf(a.values()[k]));
        else EXPECT_NEAR(a.values()[k], b.values()[k], 1e-12);
      }
    }
  }
  const Matrix none = distance_transform(BinaryImage(4, 4));
  for (double x : none.values()) EXPECT_TRUE(std::isinf(x));
}

TEST(Contour, MatchesBruteForce) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const BinaryImage g = oracle::random_mask(rng, 16, 16, 0.4);
    EXPECT_EQ(contour(g), oracle::brute_contour(g));
  }
  // the image border is not a background neighbour
  EXPECT_EQ(contour(BinaryImage(5, 5, 1)).count(), 0u);
}

TEST(Metrics, BruteForceOraclesOnRandomPairs) {
  std::mt19937_64 rng(3);
  int checked = 0;
  for (int t = 0; t < 40; ++t) {
    const BinaryImage gt = oracle::random_mask(rng, 16, 16, 0.3), pred = oracle::random_mask(rng, 16, 16, 0.3);
    if (contour(gt).count() == 0 || non_uniform_blocks(gt) == 0) continue;
    EXPECT_NEAR(mpm(pred, gt), oracle::brute_mpm(pred, gt), 1e-10);
    EXPECT_NEAR(drd(pred, gt), oracle::brute_drd(pred, gt), 1e-10);
    ++checked;
  }
  EXPECT_GT(checked, 30);
}

TEST(Metrics, TranspositionInvariance) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 20; ++t) {
    const BinaryImage gt = oracle::random_mask(rng, 13, 21, 0.3), pred = oracle::random_mask(rng, 13, 21, 0.3);
    const MetricsReport a = evaluate(pred, gt), b = evaluate(pred.transposed(), gt.transposed());
    EXPECT_NEAR(*a.fm, *b.fm, 1e-12);
    EXPECT_NEAR(*a.pfm, *b.pfm, 1e-12);
    EXPECT_NEAR(a.psnr, b.psnr, 1e-12);
    EXPECT_NEAR(*a.mpm, *b.mpm, 1e-12);
    EXPECT_NEAR(*a.drd, *b.drd, 1e-12);
  }
}

TEST(Metrics, RangesAndDegenerateValues) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    const BinaryImage gt = oracle::random_mask(rng, 16, 16, 0.3), pred = oracle::random_mask(rng, 16, 16, 0.5);
    const MetricsReport r = evaluate(pred, gt);
    EXPECT_GE(*r.fm, 0);
    EXPECT_LE(*r.fm, 1);
    EXPECT_GE(*r.pfm, 0);
    EXPECT_LE(*r.pfm, 1);
    EXPECT_GE(*r.drd, 0);
    EXPECT_GE(*r.mpm, 0);
    const MetricsReport same = evaluate(gt, gt);
    EXPECT_EQ(*same.fm, 1.0);
    EXPECT_EQ(*same.pfm, 1.0);
    EXPECT_EQ(*same.drd, 0.0);
    EXPECT_EQ(*same.mpm, 0.0);
    EXPECT_EQ(same.psnr, kPsnrCap);
  }
  const MetricsReport blank = evaluate(BinaryImage(8, 8), BinaryImage(8, 8));
  EXPECT_FALSE(blank.fm);
  EXPECT_FALSE(blank.drd);
  EXPECT_FALSE(blank.mpm);
  EXPECT_EQ(blank.psnr, kPsnrCap);
}

TEST(Metrics, OneMoreWrongPixelNeverHelps) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> pick(0, 255);
  for (int t = 0; t < 30; ++t) {
    const BinaryImage gt = oracle::random_mask(rng, 16, 16, 0.3);
    BinaryImage pred = oracle::random_mask(rng, 16, 16, 0.3);
    if (contour(gt).count() == 0) continue;
    for (int s = 0; s < 10; ++s) {
      std::size_t k = pick(rng);
      // find a pixel that is currently right
      while (pred.values()[k] != gt.values()[k]) k = (k + 1) % 256;
      BinaryImage worse = pred;
      worse.set(k / 16, k % 16, !gt.values()[k]);
      EXPECT_LE(f_measure(worse, gt).fm, f_measure(pred, gt).fm);
      EXPECT_LE(psnr(worse, gt), psnr(pred, gt));
      EXPECT_GE(mpm(worse, gt), mpm(pred, gt));
      pred = worse;
    }
  }
}
