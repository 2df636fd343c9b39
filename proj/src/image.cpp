#include "rbin/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#ifdef RBIN_HAVE_PNG
#include <png.h>
#endif

namespace rbin {

namespace fs = std::filesystem;

GrayImage::GrayImage(Matrix pixels, Scale scale) : pixels_(std::move(pixels)), scale_(scale) {
  const double hi = scale_max(scale_);
  for (double v : pixels_.values()) {
    if (!(v >= 0.0 && v <= hi)) {
      throw InvalidArgument("GrayImage: pixel value " + std::to_string(v) +
                            " outside the declared range [0, " + std::to_string(hi) + "]");
    }
  }
}

GrayImage::GrayImage(std::size_t rows, std::size_t cols, std::vector<double> pixels, Scale scale)
    : GrayImage(Matrix(rows, cols, std::move(pixels)), scale) {}

BinaryImage::BinaryImage(std::size_t rows, std::size_t cols, std::vector<std::uint8_t> mask)
    : rows_(rows), cols_(cols), mask_(std::move(mask)) {
  if (mask_.size() != rows_ * cols_) {
    throw DimensionError("BinaryImage: mask size does not match rows*cols");
  }
  for (auto& b : mask_) {
    if (b > 1) throw InvalidArgument("BinaryImage: mask values must be 0 or 1");
  }
}

std::size_t BinaryImage::count() const noexcept {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

BinaryImage BinaryImage::transposed() const {
  BinaryImage t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t.mask_[j * rows_ + i] = mask_[i * cols_ + j];
  return t;
}

// ---------------------------------------------------------------------------
// PNM

namespace {

std::string read_file(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) {
    throw LoadError(LoadError::Reason::kUnreadable, "cannot open " + path.string() + ": no such file");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadError::Reason::kUnreadable, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class PnmHeaderReader {
 public:
  PnmHeaderReader(const std::string& bytes, const fs::path& path) : bytes_(bytes), path_(path) {}

  long next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      throw LoadError(LoadError::Reason::kCorrupt, "malformed PNM header in " + path_.string());
    }
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > 1'000'000'000L) {
        throw LoadError(LoadError::Reason::kCorrupt, "PNM header value too large in " + path_.string());
      }
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from binary data.
  std::size_t binary_start() const { return pos_ + 1; }
  std::size_t pos() const { return pos_; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::string& bytes_;
  const fs::path& path_;
  std::size_t pos_ = 2;
};

struct RawRaster {
  std::size_t rows = 0, cols = 0, channels = 1;
  double maxval = 255;
  std::vector<double> samples;  // rows*cols*channels
  bool is_bitmap = false;       // PBM: 1 = black
};

RawRaster parse_pnm(const std::string& bytes, const fs::path& path) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw LoadError(LoadError::Reason::kUnsupportedFormat, "not a PNM file: " + path.string());
  }
  const char kind = bytes[1];
  if (kind < '1' || kind > '6') {
    throw LoadError(LoadError::Reason::kUnsupportedFormat,
                    std::string("unsupported PNM variant P") + kind + " in " + path.string());
  }
  PnmHeaderReader hdr(bytes, path);
  RawRaster r;
  r.cols = static_cast<std::size_t>(hdr.next_int());
  r.rows = static_cast<std::size_t>(hdr.next_int());
  const bool bitmap = kind == '1' || kind == '4';
  r.is_bitmap = bitmap;
  r.maxval = bitmap ? 1 : static_cast<double>(hdr.next_int());
  r.channels = (kind == '3' || kind == '6') ? 3 : 1;
  if (r.rows == 0 || r.cols == 0) {
    throw LoadError(LoadError::Reason::kEmptyImage, "zero-sized image: " + path.string());
  }
  if (r.maxval < 1 || r.maxval > 65535) {
    throw LoadError(LoadError::Reason::kCorrupt, "invalid maxval in " + path.string());
  }
  const std::size_t count = r.rows * r.cols * r.channels;
  r.samples.resize(count);

  const bool ascii = kind <= '3';
  if (ascii) {
    std::size_t p = hdr.pos();
    for (std::size_t k = 0; k < count; ++k) {
      while (p < bytes.size() && (std::isspace(static_cast<unsigned char>(bytes[p])) || bytes[p] == '#')) {
        if (bytes[p] == '#') {
          while (p < bytes.size() && bytes[p] != '\n') ++p;
        } else {
          ++p;
        }
      }
      if (p >= bytes.size()) throw LoadError(LoadError::Reason::kCorrupt, "truncated " + path.string());
      if (bitmap) {
        r.samples[k] = bytes[p++] == '1' ? 1.0 : 0.0;
        continue;
      }
      long v = 0;
      bool any = false;
      while (p < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[p]))) {
        v = v * 10 + (bytes[p++] - '0');
        any = true;
      }
      if (!any || v > r.maxval) throw LoadError(LoadError::Reason::kCorrupt, "bad sample in " + path.string());
      r.samples[k] = static_cast<double>(v);
    }
    return r;
  }

  const std::size_t start = hdr.binary_start();
  if (kind == '4') {
    const std::size_t row_bytes = (r.cols + 7) / 8;
    if (bytes.size() < start + row_bytes * r.rows) {
      throw LoadError(LoadError::Reason::kCorrupt, "truncated PBM data in " + path.string());
    }
    for (std::size_t i = 0; i < r.rows; ++i) {
      for (std::size_t j = 0; j < r.cols; ++j) {
        const auto byte = static_cast<unsigned char>(bytes[start + i * row_bytes + j / 8]);
        r.samples[i * r.cols + j] = (byte >> (7 - j % 8)) & 1U;
      }
    }
    return r;
  }
  const std::size_t width = r.maxval > 255 ? 2 : 1;
  if (bytes.size() < start + count * width) {
    throw LoadError(LoadError::Reason::kCorrupt, "truncated PNM data in " + path.string());
  }
  for (std::size_t k = 0; k < count; ++k) {
    unsigned v = static_cast<unsigned char>(bytes[start + k * width]);
    if (width == 2) v = (v << 8) | static_cast<unsigned char>(bytes[start + k * width + 1]);
    if (v > r.maxval) throw LoadError(LoadError::Reason::kCorrupt, "sample exceeds maxval in " + path.string());
    r.samples[k] = v;
  }
  return r;
}

#ifdef RBIN_HAVE_PNG
struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  ~PngReadGuard() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

RawRaster parse_png(const std::string& bytes, const fs::path& path) {
  PngReadGuard g;
  g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!g.png) throw LoadError(LoadError::Reason::kCorrupt, "libpng init failed");
  g.info = png_create_info_struct(g.png);
  if (!g.info) throw LoadError(LoadError::Reason::kCorrupt, "libpng init failed");

  struct Cursor {
    const std::string* data;
    std::size_t pos;
  } cursor{&bytes, 0};
  png_set_read_fn(g.png, &cursor, [](png_structp p, png_bytep out, png_size_t n) {
    auto* c = static_cast<Cursor*>(png_get_io_ptr(p));
    if (c->pos + n > c->data->size()) png_error(p, "truncated");
    std::copy_n(c->data->data() + c->pos, n, reinterpret_cast<char*>(out));
    c->pos += n;
  });

  RawRaster r;
  std::vector<png_bytep> row_ptrs;
  std::vector<unsigned char> buffer;
  if (setjmp(png_jmpbuf(g.png))) {
    throw LoadError(LoadError::Reason::kCorrupt, "corrupt PNG: " + path.string());
  }
  png_read_info(g.png, g.info);
  const auto width = png_get_image_width(g.png, g.info);
  const auto height = png_get_image_height(g.png, g.info);
  const int color = png_get_color_type(g.png, g.info);
  const int depth = png_get_bit_depth(g.png, g.info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(g.png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(g.png);
  if (depth == 16) png_set_swap(g.png);
  png_set_strip_alpha(g.png);
  png_read_update_info(g.png, g.info);
  const int channels = png_get_channels(g.png, g.info);
  const int out_depth = png_get_bit_depth(g.png, g.info);
  const std::size_t rowbytes = png_get_rowbytes(g.png, g.info);

  r.rows = height;
  r.cols = width;
  r.channels = static_cast<std::size_t>(channels);
  r.maxval = out_depth == 16 ? 65535 : 255;
  if (r.rows == 0 || r.cols == 0) throw LoadError(LoadError::Reason::kEmptyImage, "zero-sized image: " + path.string());
  if (channels != 1 && channels != 3) {
    throw LoadError(LoadError::Reason::kUnsupportedFormat, "unsupported PNG channel layout: " + path.string());
  }
  buffer.resize(rowbytes * r.rows);
  row_ptrs.resize(r.rows);
  for (std::size_t i = 0; i < r.rows; ++i) row_ptrs[i] = buffer.data() + i * rowbytes;
  png_read_image(g.png, row_ptrs.data());

  r.samples.resize(r.rows * r.cols * r.channels);
  for (std::size_t i = 0; i < r.rows; ++i) {
    for (std::size_t k = 0; k < r.cols * r.channels; ++k) {
      double v;
      if (out_depth == 16) {
        std::uint16_t s;
        std::copy_n(row_ptrs[i] + 2 * k, 2, reinterpret_cast<unsigned char*>(&s));
        v = s;
      } else {
        v = row_ptrs[i][k];
      }
      r.samples[i * r.cols * r.channels + k] = v;
    }
  }
  return r;
}
#endif

bool has_png_signature(const std::string& bytes) {
  static constexpr unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  return bytes.size() >= 8 && std::equal(sig, sig + 8, reinterpret_cast<const unsigned char*>(bytes.data()));
}

RawRaster read_raster(const fs::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.empty()) throw LoadError(LoadError::Reason::kEmptyImage, "empty file: " + path.string());
  if (has_png_signature(bytes)) {
#ifdef RBIN_HAVE_PNG
    return parse_png(bytes, path);
#else
    throw LoadError(LoadError::Reason::kUnsupportedFormat, "PNG support not compiled in: " + path.string());
#endif
  }
  if (bytes[0] == 'P') return parse_pnm(bytes, path);
  throw LoadError(LoadError::Reason::kUnsupportedFormat, "unsupported image format: " + path.string());
}

std::vector<double> to_gray(const RawRaster& r) {
  std::vector<double> gray(r.rows * r.cols);
  for (std::size_t k = 0; k < gray.size(); ++k) {
    if (r.channels == 3) {
      gray[k] = luma(r.samples[3 * k], r.samples[3 * k + 1], r.samples[3 * k + 2]);
    } else {
      gray[k] = r.samples[k];
    }
  }
  return gray;
}

void write_bytes(const fs::path& path, const std::string& header, const std::vector<unsigned char>& payload) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string lower_ext(const fs::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e;
}

}  // namespace

GrayImage load_image(const fs::path& path) {
  const RawRaster r = read_raster(path);
  std::vector<double> gray = to_gray(r);
  if (r.is_bitmap) {
    // PBM: 1 = black.
    for (double& v : gray) v = v > 0.5 ? 0.0 : 255.0;
  } else if (r.maxval != 255) {
    const double k = 255.0 / r.maxval;
    for (double& v : gray) v = std::min(255.0, v * k);
  }
  return GrayImage(r.rows, r.cols, std::move(gray), Scale::kRaw);
}

BinaryImage load_mask(const fs::path& path) {
  const RawRaster r = read_raster(path);
  std::vector<std::uint8_t> mask(r.rows * r.cols);
  if (r.is_bitmap) {
    for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = r.samples[k] > 0.5 ? 1 : 0;
  } else {
    const std::vector<double> gray = to_gray(r);
    for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = gray[k] < 0.5 * r.maxval ? 1 : 0;
  }
  return BinaryImage(r.rows, r.cols, std::move(mask));
}

void save_pgm(const GrayImage& img, const fs::path& path, int maxval) {
  if (maxval < 1 || maxval > 65535) throw InvalidArgument("save_pgm: maxval must be in [1, 65535]");
  const std::string header = "P5\n" + std::to_string(img.cols()) + " " + std::to_string(img.rows()) +
                             "\n" + std::to_string(maxval) + "\n";
  const double k = static_cast<double>(maxval) / img.max_value();
  const bool wide = maxval > 255;
  std::vector<unsigned char> payload;
  payload.reserve(img.values().size() * (wide ? 2 : 1));
  for (double v : img.values()) {
    const auto s = static_cast<unsigned>(std::clamp(std::lround(v * k), 0L, static_cast<long>(maxval)));
    if (wide) payload.push_back(static_cast<unsigned char>(s >> 8));
    payload.push_back(static_cast<unsigned char>(s & 0xFF));
  }
  write_bytes(path, header, payload);
}

void save_pbm(const BinaryImage& mask, const fs::path& path) {
  const std::string header = "P4\n" + std::to_string(mask.cols()) + " " + std::to_string(mask.rows()) + "\n";
  const std::size_t row_bytes = (mask.cols() + 7) / 8;
  std::vector<unsigned char> payload(row_bytes * mask.rows(), 0);
  for (std::size_t i = 0; i < mask.rows(); ++i)
    for (std::size_t j = 0; j < mask.cols(); ++j)
      if (mask(i, j)) payload[i * row_bytes + j / 8] |= static_cast<unsigned char>(0x80U >> (j % 8));
  write_bytes(path, header, payload);
}

bool png_supported() noexcept {
#ifdef RBIN_HAVE_PNG
  return true;
#else
  return false;
#endif
}

namespace {

void write_png8(std::size_t rows, std::size_t cols, const std::vector<unsigned char>& gray, const fs::path& path) {
#ifdef RBIN_HAVE_PNG
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("PNG encoding failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t i = 0; i < rows; ++i) png_write_row(png, gray.data() + i * cols);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
#else
  (void)rows;
  (void)cols;
  (void)gray;
  throw IoError("PNG support not compiled in: " + path.string());
#endif
}

}  // namespace

void save_png(const GrayImage& img, const fs::path& path) {
  std::vector<unsigned char> g(img.values().size());
  const double k = 255.0 / img.max_value();
  std::transform(img.values().begin(), img.values().end(), g.begin(),
                 [k](double v) { return static_cast<unsigned char>(std::clamp(std::lround(v * k), 0L, 255L)); });
  write_png8(img.rows(), img.cols(), g, path);
}

void save_png(const BinaryImage& mask, const fs::path& path) {
  std::vector<unsigned char> g(mask.size());
  std::transform(mask.values().begin(), mask.values().end(), g.begin(),
                 [](std::uint8_t b) -> unsigned char { return b ? 0 : 255; });
  write_png8(mask.rows(), mask.cols(), g, path);
}

void save_image(const GrayImage& img, const fs::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return save_png(img, path);
  if (ext == ".pgm" || ext == ".pnm") return save_pgm(img, path);
  throw InvalidArgument("unsupported output extension: " + path.string());
}

void save_mask(const BinaryImage& mask, const fs::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".pbm") return save_pbm(mask, path);
  if (ext == ".png") return save_png(mask, path);
  if (ext == ".pgm") {
    std::vector<double> v(mask.size());
    std::transform(mask.values().begin(), mask.values().end(), v.begin(),
                   [](std::uint8_t b) { return b ? 0.0 : 255.0; });
    return save_pgm(GrayImage(mask.rows(), mask.cols(), std::move(v), Scale::kRaw), path);
  }
  throw InvalidArgument("unsupported mask extension: " + path.string());
}

GrayImage normalize(const GrayImage& img) {
  if (img.scale() == Scale::kUnit) return img;
  Matrix m = img.pixels();
  for (double& v : m.values()) v /= 255.0;
  return GrayImage(std::move(m), Scale::kUnit);
}

GrayImage denormalize(const GrayImage& img) {
  if (img.scale() == Scale::kRaw) return img;
  Matrix m = img.pixels();
  for (double& v : m.values()) v = std::min(255.0, v * 255.0);
  return GrayImage(std::move(m), Scale::kRaw);
}

GrayImage invert(const GrayImage& img) {
  Matrix m = img.pixels();
  const double hi = img.max_value();
  for (double& v : m.values()) v = hi - v;
  return GrayImage(std::move(m), img.scale());
}

GrayImage rescale_for_view(const Matrix& values) {
  Matrix m = values;
  if (m.size() == 0) return GrayImage(std::move(m), Scale::kUnit);
  const auto [lo, hi] = std::minmax_element(m.values().begin(), m.values().end());
  const double a = *lo;
  const double span = *hi - *lo;
  for (double& v : m.values()) v = span > 0 ? std::clamp((v - a) / span, 0.0, 1.0) : 0.5;
  return GrayImage(std::move(m), Scale::kUnit);
}

}  // namespace rbin
