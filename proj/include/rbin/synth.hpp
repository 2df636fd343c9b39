#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbin/image.hpp"

namespace rbin {

/// Polynomial c0 + c1 t + c2 t^2 + c3 t^3 in the normalized coordinate
/// t = index / (length - 1) in [0, 1].
struct Poly1D {
  std::vector<double> coeffs;
  double operator()(double t) const;
};

/// One separable background component row(i) * col(j).
struct SeparableTerm {
  Poly1D row;
  Poly1D col;
};

/// Dark elliptical foreground object. Disk when the two radii are equal.
struct Blob {
  double center_row = 0;
  double center_col = 0;
  double radius_row = 1;
  double radius_col = 1;
  double angle = 0;  // radians
  double depth = 0;  // intensity drop below the background
  bool contains(double i, double j) const;
};

struct SceneSpec {
  std::size_t rows = 64;
  std::size_t cols = 64;
  std::vector<SeparableTerm> background;  // at most 3 terms, degree <= 3
  std::vector<Blob> blobs;
  double noise_sigma = 0;
  std::uint64_t seed = 0;
};

struct Scene {
  GrayImage image;       // unit scale, noisy
  BinaryImage mask;      // ground-truth foreground
  GrayImage background;  // ground-truth background surface
};

/// Renders a scene deterministically from its seed. Overlapping blobs take the
/// deepest drop. Noisy values are clamped to [0, 1].
Scene synth_image(const SceneSpec& spec);

/// Random disks/ellipses placed fully inside the image until the union covers
/// at least `coverage` of the pixels (or `max_blobs` is reached).
struct ScatterSpec {
  std::size_t rows = 64;
  std::size_t cols = 64;
  double coverage = 0.1;
  double min_radius = 3;
  double max_radius = 10;
  double depth = 0.3;
  double max_eccentricity = 1.0;  // radius_col / radius_row upper bound; 1 = disks only
  std::size_t max_blobs = 10000;
};
std::vector<Blob> scatter_blobs(const ScatterSpec& spec, std::uint64_t seed);

/// Convenience constructors for common background shapes.
SeparableTerm constant_term(double c);
SeparableTerm product_term(std::vector<double> row_coeffs, std::vector<double> col_coeffs);

}  // namespace rbin

namespace rbin {

struct SuiteScene {
  std::string id;
  std::string description;
  bool blank = false;  // no foreground by construction
  Scene scene;
};

/// The ten-scene evaluation suite (256 x 256): flat, slope, bowl, high noise,
/// dense, sparse, two blank backgrounds, a rank-2 background and steep
/// illumination with ellipses. Deterministic in `seed`.
std::vector<SuiteScene> synthetic_suite(std::uint64_t seed, std::size_t size = 256);

}  // namespace rbin
