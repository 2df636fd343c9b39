#include "rbin/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace rbin {

double Poly1D::operator()(double t) const {
  double acc = 0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * t + *it;
  return acc;
}

bool Blob::contains(double i, double j) const {
  const double x = i - center_row;
  const double y = j - center_col;
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double a = (x * c + y * s) / radius_row;
  const double b = (-x * s + y * c) / radius_col;
  return a * a + b * b <= 1.0;
}

namespace {

double normalized_coord(std::size_t idx, std::size_t len) {
  return len > 1 ? static_cast<double>(idx) / static_cast<double>(len - 1) : 0.0;
}

void validate(const SceneSpec& spec) {
  if (spec.rows == 0 || spec.cols == 0) throw InvalidArgument("synth_image: empty scene");
  if (spec.background.size() > 3) throw InvalidArgument("synth_image: at most 3 background terms");
  for (const auto& t : spec.background) {
    if (t.row.coeffs.size() > 4 || t.col.coeffs.size() > 4) {
      throw InvalidArgument("synth_image: background polynomials must have degree <= 3");
    }
  }
  if (spec.noise_sigma < 0) throw InvalidArgument("synth_image: negative noise sigma");
  for (const auto& b : spec.blobs) {
    if (b.center_row < 0 || b.center_row > static_cast<double>(spec.rows - 1) || b.center_col < 0 ||
        b.center_col > static_cast<double>(spec.cols - 1)) {
      throw InvalidArgument("synth_image: blob centre out of bounds");
    }
    if (b.radius_row <= 0 || b.radius_col <= 0 || b.depth < 0) {
      throw InvalidArgument("synth_image: blob radii must be positive and depth non-negative");
    }
  }
}

}  // namespace

Scene synth_image(const SceneSpec& spec) {
  validate(spec);
  const std::size_t m = spec.rows, n = spec.cols;

  Matrix bg(m, n, 0.0);
  for (const auto& term : spec.background) {
    std::vector<double> col_vals(n);
    for (std::size_t j = 0; j < n; ++j) col_vals[j] = term.col(normalized_coord(j, n));
    for (std::size_t i = 0; i < m; ++i) {
      const double r = term.row(normalized_coord(i, m));
      for (std::size_t j = 0; j < n; ++j) bg(i, j) += r * col_vals[j];
    }
  }
  for (double v : bg.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidArgument("synth_image: background leaves [0, 1] (value " + std::to_string(v) + ")");
    }
  }

  Matrix drop(m, n, 0.0);
  BinaryImage mask(m, n);
  for (const auto& b : spec.blobs) {
    const auto i0 = static_cast<std::size_t>(std::max(0.0, std::floor(b.center_row - std::max(b.radius_row, b.radius_col))));
    const auto i1 = std::min(m - 1, static_cast<std::size_t>(b.center_row + std::max(b.radius_row, b.radius_col) + 1));
    const auto j0 = static_cast<std::size_t>(std::max(0.0, std::floor(b.center_col - std::max(b.radius_row, b.radius_col))));
    const auto j1 = std::min(n - 1, static_cast<std::size_t>(b.center_col + std::max(b.radius_row, b.radius_col) + 1));
    for (std::size_t i = i0; i <= i1; ++i) {
      for (std::size_t j = j0; j <= j1; ++j) {
        if (!b.contains(static_cast<double>(i), static_cast<double>(j))) continue;
        if (b.depth > bg(i, j)) {
          throw InvalidArgument("synth_image: foreground depth exceeds the background intensity");
        }
        mask.set(i, j, b.depth > 0);
        drop(i, j) = std::max(drop(i, j), b.depth);
      }
    }
  }

  Matrix img(m, n);
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0 ? spec.noise_sigma : 1.0);
  for (std::size_t k = 0; k < img.size(); ++k) {
    double v = bg.values()[k] - drop.values()[k];
    if (spec.noise_sigma > 0) v += noise(rng);
    img.values()[k] = std::clamp(v, 0.0, 1.0);
  }

  return Scene{GrayImage(std::move(img), Scale::kUnit), std::move(mask), GrayImage(std::move(bg), Scale::kUnit)};
}

std::vector<Blob> scatter_blobs(const ScatterSpec& spec, std::uint64_t seed) {
  if (spec.min_radius <= 0 || spec.max_radius < spec.min_radius) {
    throw InvalidArgument("scatter_blobs: invalid radius range");
  }
  if (2 * spec.max_radius * std::max(1.0, spec.max_eccentricity) >= static_cast<double>(std::min(spec.rows, spec.cols))) {
    throw InvalidArgument("scatter_blobs: blobs do not fit in the image");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double total = static_cast<double>(spec.rows * spec.cols);
  BinaryImage cover(spec.rows, spec.cols);
  std::size_t covered = 0;
  std::vector<Blob> blobs;
  while (static_cast<double>(covered) < spec.coverage * total && blobs.size() < spec.max_blobs) {
    Blob b;
    b.radius_row = spec.min_radius + (spec.max_radius - spec.min_radius) * unit(rng);
    b.radius_col = b.radius_row * (1.0 + (spec.max_eccentricity - 1.0) * unit(rng));
    b.angle = spec.max_eccentricity > 1.0 ? M_PI * unit(rng) : 0.0;
    b.depth = spec.depth;
    const double reach = std::max(b.radius_row, b.radius_col);
    b.center_row = reach + (static_cast<double>(spec.rows - 1) - 2 * reach) * unit(rng);
    b.center_col = reach + (static_cast<double>(spec.cols - 1) - 2 * reach) * unit(rng);
    const auto i0 = static_cast<std::size_t>(std::floor(b.center_row - reach));
    const auto i1 = std::min(spec.rows - 1, static_cast<std::size_t>(b.center_row + reach + 1));
    const auto j0 = static_cast<std::size_t>(std::floor(b.center_col - reach));
    const auto j1 = std::min(spec.cols - 1, static_cast<std::size_t>(b.center_col + reach + 1));
    for (std::size_t i = i0; i <= i1; ++i)
      for (std::size_t j = j0; j <= j1; ++j)
        if (!cover(i, j) && b.contains(static_cast<double>(i), static_cast<double>(j))) {
          cover.set(i, j, true);
          ++covered;
        }
    blobs.push_back(b);
  }
  return blobs;
}

SeparableTerm constant_term(double c) { return SeparableTerm{Poly1D{{c}}, Poly1D{{1.0}}}; }

SeparableTerm product_term(std::vector<double> row_coeffs, std::vector<double> col_coeffs) {
  return SeparableTerm{Poly1D{std::move(row_coeffs)}, Poly1D{std::move(col_coeffs)}};
}

std::vector<SuiteScene> synthetic_suite(std::uint64_t seed, std::size_t size) {
  if (size < 64) throw InvalidArgument("synthetic_suite: size must be at least 64");
  const double scale = static_cast<double>(size) / 256.0;
  std::vector<SuiteScene> out;
  std::uint64_t k = 0;
  // Each scene gets its own stream: seed * 1000 + index, for blobs and noise.
  auto add = [&](std::string id, std::string desc, std::vector<SeparableTerm> bg, double coverage, double depth,
                 double sigma, double max_ecc = 1.0, double rmin = 4, double rmax = 12) {
    ++k;
    SceneSpec spec;
    spec.rows = spec.cols = size;
    spec.background = std::move(bg);
    spec.noise_sigma = sigma;
    spec.seed = seed * 1000 + 2 * k;
    if (coverage > 0) {
      ScatterSpec sc;
      sc.rows = sc.cols = size;
      sc.coverage = coverage;
      sc.min_radius = rmin * scale;
      sc.max_radius = rmax * scale;
      sc.depth = depth;
      sc.max_eccentricity = max_ecc;
      spec.blobs = scatter_blobs(sc, seed * 1000 + 2 * k + 1);
    }
    out.push_back(SuiteScene{std::move(id), std::move(desc), coverage == 0, synth_image(spec)});
  };

  add("s01_flat", "flat background, disks", {constant_term(0.75)}, 0.10, 0.4, 0.03);
  add("s02_slope", "linear slope across columns", {product_term({1.0}, {0.45, 0.4})}, 0.10, 0.3, 0.03);
  // (0.65 + t - t^2) peaks at 0.9 in the middle of each axis
  add("s03_bowl", "separable bowl", {product_term({0.65, 1.0, -1.0}, {0.65, 1.0, -1.0})}, 0.10, 0.3, 0.03);
  add("s04_noisy", "slope, heavy noise", {product_term({1.0}, {0.6, 0.25})}, 0.10, 0.5, 0.10);
  add("s05_dense", "dense foreground", {product_term({0.7, 0.15}, {1.0})}, 0.28, 0.4, 0.03);
  add("s06_sparse", "sparse foreground", {constant_term(0.7)}, 0.008, 0.4, 0.03, 1.0, 3, 6);
  add("s07_blank_flat", "flat background only", {constant_term(0.7)}, 0.0, 0.0, 0.02);
  add("s08_blank_slope", "sloped background only", {product_term({0.55, 0.2}, {1.0, 0.3})}, 0.0, 0.0, 0.02);
  add("s09_rank2", "additive row and column trends",
      {constant_term(0.45), product_term({0.0, 0.25}, {1.0}), product_term({1.0}, {0.0, 0.2})}, 0.10, 0.3, 0.03);
  add("s10_steep", "steep illumination, ellipses", {product_term({0.35, 0.6}, {1.0})}, 0.12, 0.25, 0.02, 2.5, 3,
      9);
  return out;
}

}  // namespace rbin
