#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "rbin/image.hpp"
#include "scratch.hpp"

using namespace rbin;

TEST(GrayImage, RejectsOutOfRangePixels) {
  EXPECT_THROW(GrayImage(1, 2, {0.0, 1.5}, Scale::kUnit), InvalidArgument);
  EXPECT_THROW(GrayImage(1, 2, {-1.0, 10.0}, Scale::kRaw), InvalidArgument);
  EXPECT_THROW(GrayImage(2, 2, {0.0, 1.0, 2.0}, Scale::kRaw), DimensionError);
  EXPECT_NO_THROW(GrayImage(1, 2, {0.0, 255.0}, Scale::kRaw));
}

TEST(BinaryImage, ValuesAreZeroOrOne) {
  EXPECT_THROW(BinaryImage(1, 2, std::vector<std::uint8_t>{0, 2}), InvalidArgument);
  BinaryImage b(2, 3, std::vector<std::uint8_t>{1, 0, 0, 1, 1, 0});
  EXPECT_EQ(b.count(), 3u);
  EXPECT_DOUBLE_EQ(b.fraction(), 0.5);
  const BinaryImage t = b.transposed();
  EXPECT_EQ(t.rows(), 3u);
  EXPECT_EQ(t(1, 1), 1);
  EXPECT_EQ(t(0, 1), 1);
  EXPECT_EQ(t.transposed(), b);
}

TEST(Luma, PureRed) { EXPECT_NEAR(luma(255, 0, 0), 76.245, 1e-12); }

TEST(Normalize, Examples) {
  const GrayImage raw(1, 3, {255, 0, 128}, Scale::kRaw);
  const GrayImage u = normalize(raw);
  EXPECT_EQ(u.scale(), Scale::kUnit);
  EXPECT_EQ(u(0, 0), 1.0);
  EXPECT_EQ(u(0, 1), 0.0);
  EXPECT_NEAR(u(0, 2), 0.50196, 1e-5);
  EXPECT_EQ(u(0, 2), 128.0 / 255.0);
  const GrayImage back = denormalize(u);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(back(0, j), raw(0, j), 1e-12);
}

TEST(Invert, Examples) {
  EXPECT_NEAR(invert(GrayImage(1, 1, {0.2}, Scale::kUnit))(0, 0), 0.8, 1e-15);
  EXPECT_EQ(invert(GrayImage(1, 1, {255}, Scale::kRaw))(0, 0), 0.0);
}

TEST(Invert, DoubleInversionIsExactOnRawIntegers) {
  std::vector<double> px(256);
  for (int v = 0; v < 256; ++v) px[v] = v;
  const GrayImage img(16, 16, px, Scale::kRaw);
  EXPECT_EQ(invert(invert(img)), img);
}

TEST(Invert, DoubleInversionWithinOneUlpOnUnitScale) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(0, 1);
  std::vector<double> px(400);
  for (double& x : px) x = d(rng);
  const GrayImage img(20, 20, px, Scale::kUnit);
  const GrayImage twice = invert(invert(img));
  for (std::size_t k = 0; k < px.size(); ++k) {
    EXPECT_LE(std::abs(twice.values()[k] - px[k]), std::nextafter(1.0, 2.0) - 1.0);
  }
}

// One unit of least precision measured at the top of the unit scale.
TEST(Invert, CommutesWithNormalize) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> d(0, 255);
  std::vector<double> px(900);
  for (double& x : px) x = d(rng);
  const GrayImage img(30, 30, px, Scale::kRaw);
  const GrayImage a = normalize(invert(img)), b = invert(normalize(img));
  const double ulp = std::numeric_limits<double>::epsilon();
  for (std::size_t k = 0; k < px.size(); ++k) EXPECT_LE(std::abs(a.values()[k] - b.values()[k]), ulp) << px[k];
}

TEST(Pgm, LoadSaveLoadIsBitExact8Bit) {
  ScratchDir dir("pgm8");
  std::mt19937_64 rng(3);
  std::string payload;
  for (int k = 0; k < 5 * 7; ++k) payload.push_back(char(rng() & 0xff));
  spit(dir / "a.pgm", "P5\n7 5\n255\n" + payload);
  const GrayImage a = load_image(dir / "a.pgm");
  EXPECT_EQ(a.rows(), 5u);
  EXPECT_EQ(a.cols(), 7u);
  save_pgm(a, dir / "b.pgm");
  EXPECT_EQ(slurp(dir / "b.pgm"), slurp(dir / "a.pgm"));
  EXPECT_EQ(load_image(dir / "b.pgm"), a);
}

TEST(Pgm, SixteenBitBigEndianRoundTrip) {
  ScratchDir dir("pgm16");
  std::string payload;
  const std::vector<int> vals{0, 1, 256, 65535, 12345, 40000, 7, 65534, 300};
  for (int v : vals) {
    payload.push_back(char(v >> 8));
    payload.push_back(char(v & 0xff));
  }
  spit(dir / "a.pgm", "P5\n3 3\n65535\n" + payload);
  const GrayImage a = load_image(dir / "a.pgm");
  EXPECT_EQ(a.scale(), Scale::kRaw);
  EXPECT_DOUBLE_EQ(a(0, 1), 255.0 / 65535.0);
  EXPECT_DOUBLE_EQ(a(1, 0), 255.0);
  save_pgm(a, dir / "b.pgm", 65535);
  EXPECT_EQ(slurp(dir / "b.pgm"), slurp(dir / "a.pgm"));
}

TEST(Pgm, HeaderCommentsAndAsciiVariants) {
  ScratchDir dir("pnm");
  spit(dir / "a.pgm", "P2\n# comment\n3 1\n# another\n10\n0 5 10\n");
  const GrayImage a = load_image(dir / "a.pgm");
  EXPECT_DOUBLE_EQ(a(0, 1), 127.5);
  EXPECT_DOUBLE_EQ(a(0, 2), 255.0);

  spit(dir / "c.ppm", std::string("P6\n1 1\n255\n") + char(255) + char(0) + char(0));
  EXPECT_NEAR(load_image(dir / "c.ppm")(0, 0), 76.245, 1e-12);

  spit(dir / "d.pbm", "P1\n3 1\n1 0 1\n");
  const GrayImage d = load_image(dir / "d.pbm");
  EXPECT_EQ(d(0, 0), 0.0);  // set bit is black
  EXPECT_EQ(d(0, 1), 255.0);
}

TEST(Pgm, TinyImageLoads) {
  ScratchDir dir("tiny");
  spit(dir / "a.pgm", std::string("P5\n2 2\n255\n") + char(0) + char(128) + char(255) + char(64));
  const GrayImage a = load_image(dir / "a.pgm");
  EXPECT_EQ(a.rows(), 2u);
  EXPECT_EQ(a(0, 1), 128.0);
  EXPECT_EQ(a(1, 1), 64.0);
}

TEST(Load, DistinctErrors) {
  ScratchDir dir("errs");
  auto reason = [](const std::filesystem::path& p) {
    try {
      load_image(p);
    } catch (const LoadError& e) {
      return e.reason();
    }
    ADD_FAILURE() << "no error for " << p;
    return LoadError::Reason::kCorrupt;
  };
  EXPECT_EQ(reason(dir / "missing.pgm"), LoadError::Reason::kUnreadable);
  spit(dir / "x.gif", "GIF89a....");
  EXPECT_EQ(reason(dir / "x.gif"), LoadError::Reason::kUnsupportedFormat);
  spit(dir / "z.pgm", "P5\n0 0\n255\n");
  EXPECT_EQ(reason(dir / "z.pgm"), LoadError::Reason::kEmptyImage);
  spit(dir / "t.pgm", "P5\n4 4\n255\nabc");
  EXPECT_EQ(reason(dir / "t.pgm"), LoadError::Reason::kCorrupt);
}

TEST(Mask, PbmRoundTripAndGrayMasks) {
  ScratchDir dir("mask");
  std::mt19937_64 rng(4);
  BinaryImage m(13, 11);
  for (std::size_t i = 0; i < 13; ++i)
    for (std::size_t j = 0; j < 11; ++j) m.set(i, j, rng() & 1);
  save_pbm(m, dir / "m.pbm");
  EXPECT_EQ(load_mask(dir / "m.pbm"), m);
  // grayscale GT: dark is foreground
  spit(dir / "g.pgm", std::string("P5\n3 1\n255\n") + char(0) + char(200) + char(100));
  const BinaryImage g = load_mask(dir / "g.pgm");
  EXPECT_EQ(g(0, 0), 1);
  EXPECT_EQ(g(0, 1), 0);
  EXPECT_EQ(g(0, 2), 1);
}

TEST(Png, RoundTripWhenAvailable) {
  if (!png_supported()) GTEST_SKIP() << "built without libpng";
  ScratchDir dir("png");
  std::vector<double> px(64 * 48);
  for (std::size_t k = 0; k < px.size(); ++k) px[k] = double(k % 256);
  const GrayImage img(64, 48, px, Scale::kRaw);
  save_png(img, dir / "a.png");
  EXPECT_EQ(load_image(dir / "a.png"), img);
  BinaryImage m(5, 4);
  m.set(2, 3, true);
  save_mask(m, dir / "m.png");
  EXPECT_EQ(load_mask(dir / "m.png"), m);
}

TEST(RescaleForView, MapsOntoUnitRange) {
  Matrix m(1, 3, std::vector<double>{-2, 0, 2});
  const GrayImage v = rescale_for_view(m);
  EXPECT_EQ(v(0, 0), 0.0);
  EXPECT_EQ(v(0, 1), 0.5);
  EXPECT_EQ(v(0, 2), 1.0);
  EXPECT_NO_THROW(rescale_for_view(Matrix(2, 2, 3.0)));
}
