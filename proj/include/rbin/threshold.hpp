#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rbin/background.hpp"
#include "rbin/image.hpp"
#include "rbin/matrix.hpp"

namespace rbin {

/// Y - L, unclamped. Lives on whatever scale the fit ran on.
struct SubtractedImage {
  Matrix values;
  std::size_t rows() const noexcept { return values.rows(); }
  std::size_t cols() const noexcept { return values.cols(); }
};

SubtractedImage subtract_background(const Matrix& y, const Matrix& l);
SubtractedImage subtract_background(const GrayImage& y, const BackgroundModel& l);

enum class GmdlBranch {
  kFirst,       // model beats the null fit per degree of freedom
  kNull,        // (N/2) log(FSS/N) + (1/2) log N
  kDegenerate,  // p = N or RSS = 0: +inf
};

struct GmdlEvaluation {
  double tau = 0;
  double rss = 0;      // sum of squares over pixels above tau
  double fss = 0;      // sum of squares over all pixels
  std::size_t p = 0;   // pixels at or below tau
  double gmdl = 0;
  GmdlBranch branch = GmdlBranch::kNull;
};

/// Score for N pixels, p retained, given RSS and FSS. Never NaN: FSS = 0
/// scores -inf on the null branch, degenerate models score +inf.
double gmdl_value(std::size_t n, std::size_t p, double rss, double fss, GmdlBranch* branch = nullptr);

/// Direct evaluation for one candidate (O(mn)).
GmdlEvaluation gmdl_score(double tau, const SubtractedImage& y);

struct ThresholdConfig {
  /// Up to this many unique values every one is a candidate.
  std::size_t exact_cap = 4096;
  /// Otherwise this many quantile-spaced candidates.
  std::size_t quantile_count = 1024;
  /// Also consider the empty model (tau just below the minimum, p = 0).
  bool include_empty_model = true;
};

struct ThresholdSelection {
  double tau = 0;
  std::size_t best = 0;  // index into trace
  bool exact = true;     // false when quantile candidates were used
  std::vector<GmdlEvaluation> trace;
};

/// Argmin of gMDL over the candidate set; ties go to the smaller tau.
ThresholdSelection select_threshold(const SubtractedImage& y, const ThresholdConfig& cfg = {});

/// mask(i,j) = [values(i,j) <= tau].
BinaryImage apply_threshold(const Matrix& values, double tau);

enum class ThresholdSelector { kGmdl, kOtsu };

struct BinarizeOptions {
  HuberConfig huber;
  ThresholdConfig threshold;
  ThresholdSelector selector = ThresholdSelector::kGmdl;
};

struct BinarizationResult {
  BinaryImage mask;
  double tau = 0;
  Scale fit_scale = Scale::kUnit;  // scale of background, subtracted and tau
  Matrix background;
  SubtractedImage subtracted;
  std::vector<GmdlEvaluation> gmdl_trace;
  BackgroundModel model;
};

/// Background fit, subtraction, threshold selection, mask. Raw-scale input is
/// normalized first unless huber.fit_raw_scale asks for the raw scale.
BinarizationResult binarize(const GrayImage& y, const BinarizeOptions& opt = {});

// ---- classic baselines -------------------------------------------------

struct OtsuResult {
  double tau = 0;     // upper edge of the last foreground bin
  std::size_t bin = 0;
  bool degenerate = false;  // fewer than two occupied bins; mask is empty
  BinaryImage mask;
};

/// Between-class variance maximization over `bins` equal bins on [lo, hi].
/// Foreground = values whose bin index is <= the chosen bin.
OtsuResult otsu_values(const Matrix& values, double lo, double hi, std::size_t bins = 256);
/// Histogram over the image's declared scale range.
OtsuResult otsu(const GrayImage& y);

/// Local mean and (population) standard deviation over a w x w window with
/// replicated borders, via integral images.
struct WindowStats {
  Matrix mean;
  Matrix stddev;
};
WindowStats window_stats(const Matrix& values, int window);

/// Foreground where value <= M + k S.
BinaryImage niblack(const GrayImage& y, int window = 25, double k = -0.2);
/// Foreground where value <= M (1 + 0.5 (1 - S / 128)); raw scale.
BinaryImage sauvola(const GrayImage& y, int window = 25);

}  // namespace rbin
