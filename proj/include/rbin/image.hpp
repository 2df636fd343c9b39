#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rbin/matrix.hpp"

namespace rbin {

/// Declared intensity range of a GrayImage.
enum class Scale {
  kRaw,   // [0, 255]
  kUnit,  // [0, 1]
};

constexpr double scale_max(Scale s) noexcept { return s == Scale::kRaw ? 255.0 : 1.0; }

/// Immutable grayscale image with double-precision pixels.
///
/// Pixels are stored row-major in a Matrix; every value lies in
/// [0, scale_max(scale())]. Dimensions are not restricted here: the fitting
/// code rejects images smaller than 3x3, loading does not.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(Matrix pixels, Scale scale);
  GrayImage(std::size_t rows, std::size_t cols, std::vector<double> pixels, Scale scale);

  std::size_t rows() const noexcept { return pixels_.rows(); }
  std::size_t cols() const noexcept { return pixels_.cols(); }
  Scale scale() const noexcept { return scale_; }
  double max_value() const noexcept { return scale_max(scale_); }

  double operator()(std::size_t i, std::size_t j) const { return pixels_(i, j); }
  const Matrix& pixels() const noexcept { return pixels_; }
  std::span<const double> values() const noexcept { return pixels_.values(); }

  bool operator==(const GrayImage&) const = default;

 private:
  Matrix pixels_;
  Scale scale_ = Scale::kRaw;
};

/// Binary mask, 1 = foreground. Same layout as GrayImage.
class BinaryImage {
 public:
  BinaryImage() = default;
  BinaryImage(std::size_t rows, std::size_t cols, std::uint8_t fill = 0)
      : rows_(rows), cols_(cols), mask_(rows * cols, fill) {}
  BinaryImage(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> mask);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return mask_.size(); }

  std::uint8_t operator()(std::size_t i, std::size_t j) const { return mask_[i * cols_ + j]; }
  void set(std::size_t i, std::size_t j, bool on) { mask_[i * cols_ + j] = on ? 1 : 0; }
  std::span<const std::uint8_t> values() const noexcept { return mask_; }

  std::size_t count() const noexcept;
  double fraction() const noexcept {
    return mask_.empty() ? 0.0 : static_cast<double>(count()) / static_cast<double>(size());
  }
  bool same_shape(const BinaryImage& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }
  BinaryImage transposed() const;

  bool operator==(const BinaryImage&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> mask_;
};

// Luma weights for RGB -> gray.
constexpr double kLumaR = 0.299;
constexpr double kLumaG = 0.587;
constexpr double kLumaB = 0.114;

constexpr double luma(double r, double g, double b) noexcept {
  return kLumaR * r + kLumaG * g + kLumaB * b;
}

/// Loads PGM/PPM (P2, P3, P5, P6; maxval up to 65535) or, when built with
/// libpng, 8/16-bit gray or RGB PNG. The result is always on the raw scale.
GrayImage load_image(const std::filesystem::path& path);

/// Loads a ground-truth or predicted mask. Accepts PBM (P1/P4) where a set bit
/// is foreground, or any grayscale format where dark pixels (< half range) are
/// foreground.
BinaryImage load_mask(const std::filesystem::path& path);

/// Writes binary PGM: "P5\n<w> <h>\n<maxval>\n" then big-endian samples.
/// Raw-scale values are rounded; unit-scale images are scaled by maxval first.
void save_pgm(const GrayImage& img, const std::filesystem::path& path, int maxval = 255);

/// Writes P4 PBM with foreground as the black (set) bit.
void save_pbm(const BinaryImage& mask, const std::filesystem::path& path);

/// 8-bit PNG writers. Throw IoError when the build has no PNG support.
void save_png(const GrayImage& img, const std::filesystem::path& path);
void save_png(const BinaryImage& mask, const std::filesystem::path& path);
bool png_supported() noexcept;

/// Dispatches on the extension: .pgm/.pnm, .png.
void save_image(const GrayImage& img, const std::filesystem::path& path);
/// Dispatches on the extension: .pbm, .png, .pgm.
void save_mask(const BinaryImage& mask, const std::filesystem::path& path);

/// Raw [0,255] -> unit [0,1]. Unit-scale input is returned unchanged.
GrayImage normalize(const GrayImage& img);
/// Unit [0,1] -> raw [0,255].
GrayImage denormalize(const GrayImage& img);
/// scale_max - pixel.
GrayImage invert(const GrayImage& img);

/// Linearly maps an arbitrary real matrix onto [0, 1] for visualization.
GrayImage rescale_for_view(const Matrix& values);

}  // namespace rbin
