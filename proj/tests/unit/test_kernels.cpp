#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "rbin/kernels.hpp"

using namespace rbin;
namespace k = rbin::kernels;

namespace {

struct Case {
  Matrix r, w;
  std::vector<double> u, v;
};

Case make_case(std::mt19937_64& rng, std::size_t m, std::size_t n) {
  return {oracle::random_matrix(rng, m, n), oracle::random_matrix(rng, m, n, 0.01, 1.0), oracle::random_vector(rng, m),
          oracle::random_vector(rng, n)};
}

}  // namespace

TEST(Kernels, SerialMatchesNaiveSums) {
  std::mt19937_64 rng(1);
  const Case c = make_case(rng, 9, 13);
  std::vector<double> a(9), b(9), a2(13), b2(13);
  k::serial::row_normal(c.r, c.w, c.v, a, b);
  k::serial::col_normal(c.r, c.w, c.u, a2, b2);
  for (std::size_t i = 0; i < 9; ++i) {
    double sa = 0, sb = 0;
    for (std::size_t j = 0; j < 13; ++j) {
      sa += c.w(i, j) * c.v[j] * c.v[j];
      sb += c.w(i, j) * c.r(i, j) * c.v[j];
    }
    EXPECT_NEAR(a[i], sa, 1e-13);
    EXPECT_NEAR(b[i], sb, 1e-13);
  }
  for (std::size_t j = 0; j < 13; ++j) {
    double sa = 0, sb = 0;
    for (std::size_t i = 0; i < 9; ++i) {
      sa += c.w(i, j) * c.u[i] * c.u[i];
      sb += c.w(i, j) * c.r(i, j) * c.u[i];
    }
    EXPECT_NEAR(a2[j], sa, 1e-13);
    EXPECT_NEAR(b2[j], sb, 1e-13);
  }
  double sse = 0;
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 13; ++j) sse += c.w(i, j) * std::pow(c.r(i, j) - c.u[i] * c.v[j], 2);
  EXPECT_NEAR(k::serial::weighted_sse(c.r, c.w, c.u, c.v), sse, 1e-12);

  Matrix w(9, 13);
  k::serial::huber_weights(c.r, c.u, c.v, 0.3, w);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 13; ++j) {
      const double e = std::abs(c.r(i, j) - c.u[i] * c.v[j]);
      EXPECT_DOUBLE_EQ(w(i, j), e <= 0.3 ? 1.0 : 0.3 / e);
    }
  Matrix d = c.r;
  k::serial::deflate(d, c.u, c.v);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t j = 0; j < 13; ++j) EXPECT_EQ(d(i, j), c.r(i, j) - c.u[i] * c.v[j]);
}

// The parallel set must reproduce the serial reference bit for bit.
TEST(Kernels, OpenMpIsBitIdenticalToSerial) {
  std::mt19937_64 rng(2);
  for (auto [m, n] : {std::pair<std::size_t, std::size_t>{3, 3}, {17, 200}, {130, 70}, {256, 256}}) {
    const Case c = make_case(rng, m, n);
    std::vector<double> a1(m), b1(m), a2(m), b2(m);
    k::serial::row_normal(c.r, c.w, c.v, a1, b1);
    k::omp::row_normal(c.r, c.w, c.v, a2, b2);
    EXPECT_EQ(a1, a2);
    EXPECT_EQ(b1, b2);
    std::vector<double> c1(n), d1(n), c2(n), d2(n);
    k::serial::col_normal(c.r, c.w, c.u, c1, d1);
    k::omp::col_normal(c.r, c.w, c.u, c2, d2);
    EXPECT_EQ(c1, c2);
    EXPECT_EQ(d1, d2);
    EXPECT_EQ(k::serial::weighted_sse(c.r, c.w, c.u, c.v), k::omp::weighted_sse(c.r, c.w, c.u, c.v));
    Matrix w1(m, n), w2(m, n);
    k::serial::huber_weights(c.r, c.u, c.v, 0.25, w1);
    k::omp::huber_weights(c.r, c.u, c.v, 0.25, w2);
    EXPECT_EQ(w1, w2);
    Matrix r1 = c.r, r2 = c.r;
    k::serial::deflate(r1, c.u, c.v);
    k::omp::deflate(r2, c.u, c.v);
    EXPECT_EQ(r1, r2);
  }
}

TEST(Kernels, SelectFallsBackWithoutOpenMp) {
  const auto& s = k::select(k::Backend::kSerial);
  EXPECT_EQ(s.row_normal, &k::serial::row_normal);
  const auto& o = k::select(k::Backend::kOpenMP);
  if (k::openmp_available()) {
    EXPECT_EQ(o.row_normal, &k::omp::row_normal);
  } else {
    EXPECT_EQ(o.row_normal, &k::serial::row_normal);
  }
}

TEST(NoiseScale, RecoversGaussianSigmaUnderTrendAndEdges) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0, 0.04);
  Matrix r(200, 200);
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t j = 0; j < 200; ++j) {
      const double trend = 0.3 + 0.002 * double(i) + 0.001 * double(j);
      const double ditch = (i > 50 && i < 70) ? -0.4 : 0.0;
      r(i, j) = trend + ditch + g(rng);
    }
  EXPECT_NEAR(k::difference_noise_scale(r), 0.04, 0.004);
  EXPECT_EQ(k::difference_noise_scale(Matrix(5, 5, 1.0)), 0.0);
}
