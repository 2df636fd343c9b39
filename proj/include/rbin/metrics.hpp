#pragma once

#include <array>
#include <cstddef>
#include <optional>

#include "rbin/image.hpp"
#include "rbin/matrix.hpp"

namespace rbin {

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};
ConfusionCounts confusion(const BinaryImage& pred, const BinaryImage& gt);

/// Foreground pixels with at least one in-image 4-neighbour in the background.
BinaryImage contour(const BinaryImage& mask);

/// Exact Euclidean distance from every pixel to the nearest set pixel of
/// `sites` (separable lower-envelope transform). +inf everywhere if empty.
Matrix distance_transform(const BinaryImage& sites);

struct FMeasure {
  double fm = 0, rc = 0, pr = 0;
};
FMeasure f_measure(const BinaryImage& pred, const BinaryImage& gt);

inline constexpr double kPsnrCap = 99.0;
/// 10 log10(1 / MSE) on {0,1} masks, capped at 99 dB.
double psnr(const BinaryImage& pred, const BinaryImage& gt);

/// (sum of FN distances + sum of FP distances) / (2 D), distances to the GT
/// contour, D = sum of those distances over every pixel.
double mpm(const BinaryImage& pred, const BinaryImage& gt);

/// 5x5 inverse-distance weights (centre 0), normalized to sum 1.
std::array<std::array<double, 5>, 5> drd_weights();
/// 8x8 blocks of the GT (edge blocks may be partial) that are not uniform.
std::size_t non_uniform_blocks(const BinaryImage& gt);
double drd(const BinaryImage& pred, const BinaryImage& gt);

/// F-measure where an error at GT-contour distance d costs d / (1 + d)
/// instead of 1, so errors hugging the contour are forgiven.
double pseudo_f_measure(const BinaryImage& pred, const BinaryImage& gt);

struct MetricsReport {
  ConfusionCounts counts;
  // Empty when the metric is undefined for this GT (no foreground, no
  // contour, or a uniform GT for DRD).
  std::optional<double> fm, pfm, drd, mpm;
  double psnr = 0;
};
MetricsReport evaluate(const BinaryImage& pred, const BinaryImage& gt);

}  // namespace rbin
