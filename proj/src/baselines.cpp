#include <algorithm>
#include <cmath>

#include "rbin/log.hpp"
#include "rbin/threshold.hpp"

namespace rbin {

namespace {

std::size_t bin_of(double x, double lo, double hi, std::size_t bins) {
  if (!(hi > lo)) return 0;
  const double t = (x - lo) / (hi - lo) * static_cast<double>(bins);
  if (!(t > 0)) return 0;
  return std::min(bins - 1, static_cast<std::size_t>(t));
}

}  // namespace

OtsuResult otsu_values(const Matrix& values, double lo, double hi, std::size_t bins) {
  if (bins < 2) throw InvalidArgument("otsu: need at least two bins");
  if (!(hi >= lo)) throw InvalidArgument("otsu: empty histogram range");
  std::vector<double> hist(bins, 0.0);
  for (double x : values.values()) hist[bin_of(x, lo, hi, bins)] += 1.0;

  OtsuResult res;
  res.mask = BinaryImage(values.rows(), values.cols(), 0);
  const std::size_t occupied = static_cast<std::size_t>(std::count_if(hist.begin(), hist.end(), [](double h) { return h > 0; }));
  if (occupied < 2) {
    res.degenerate = true;
    res.tau = lo;
    return res;
  }

  const double total = static_cast<double>(values.size());
  double sum_all = 0;
  for (std::size_t b = 0; b < bins; ++b) sum_all += static_cast<double>(b) * hist[b];
  double w0 = 0, sum0 = 0, best = -1;
  std::size_t best_bin = 0;
  for (std::size_t t = 0; t + 1 < bins; ++t) {
    w0 += hist[t];
    sum0 += static_cast<double>(t) * hist[t];
    const double w1 = total - w0;
    if (w0 == 0 || w1 == 0) continue;
    const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_bin = t;
    }
  }
  res.bin = best_bin;
  res.tau = lo + (hi - lo) * static_cast<double>(best_bin + 1) / static_cast<double>(bins);
  for (std::size_t i = 0; i < values.rows(); ++i) {
    for (std::size_t j = 0; j < values.cols(); ++j) res.mask.set(i, j, bin_of(values(i, j), lo, hi, bins) <= best_bin);
  }
  return res;
}

OtsuResult otsu(const GrayImage& y) {
  OtsuResult r = otsu_values(y.pixels(), 0.0, scale_max(y.scale()));
  if (r.degenerate) log::warn("otsu: single occupied histogram bin; returning an empty mask");
  return r;
}

WindowStats window_stats(const Matrix& values, int window) {
  if (window < 3 || window % 2 == 0) throw InvalidArgument("window must be odd and >= 3");
  const std::size_t m = values.rows(), n = values.cols();
  if (m == 0 || n == 0) return {Matrix(m, n), Matrix(m, n)};
  const std::ptrdiff_t h = window / 2;
  const std::size_t pm = m + 2 * static_cast<std::size_t>(h), pn = n + 2 * static_cast<std::size_t>(h);
  auto clamp_idx = [](std::ptrdiff_t k, std::size_t len) {
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(len) - 1));
  };
  // Integral images over the replicate-padded grid, one extra zero row/col.
  Matrix s1(pm + 1, pn + 1, 0.0), s2(pm + 1, pn + 1, 0.0);
  for (std::size_t i = 0; i < pm; ++i) {
    const std::size_t si = clamp_idx(static_cast<std::ptrdiff_t>(i) - h, m);
    double r1 = 0, r2 = 0;
    for (std::size_t j = 0; j < pn; ++j) {
      const double x = values(si, clamp_idx(static_cast<std::ptrdiff_t>(j) - h, n));
      r1 += x;
      r2 += x * x;
      s1(i + 1, j + 1) = s1(i, j + 1) + r1;
      s2(i + 1, j + 1) = s2(i, j + 1) + r2;
    }
  }
  const double count = static_cast<double>(window) * static_cast<double>(window);
  const std::size_t w = static_cast<std::size_t>(window);
  WindowStats out{Matrix(m, n), Matrix(m, n)};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      // padded window rows i..i+w-1, cols j..j+w-1
      const double a = s1(i + w, j + w) - s1(i, j + w) - s1(i + w, j) + s1(i, j);
      const double b = s2(i + w, j + w) - s2(i, j + w) - s2(i + w, j) + s2(i, j);
      const double mean = a / count;
      const double var = std::max(0.0, (b - a * a / count) / count);
      out.mean(i, j) = mean;
      out.stddev(i, j) = std::sqrt(var);
    }
  }
  return out;
}

BinaryImage niblack(const GrayImage& y, int window, double k) {
  const WindowStats st = window_stats(y.pixels(), window);
  BinaryImage mask(y.rows(), y.cols(), 0);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) mask.set(i, j, y(i, j) <= st.mean(i, j) + k * st.stddev(i, j));
  }
  return mask;
}

BinaryImage sauvola(const GrayImage& y, int window) {
  const GrayImage raw = y.scale() == Scale::kRaw ? y : denormalize(y);
  const WindowStats st = window_stats(raw.pixels(), window);
  BinaryImage mask(y.rows(), y.cols(), 0);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) {
      const double t = st.mean(i, j) * (1.0 + 0.5 * (1.0 - st.stddev(i, j) / 128.0));
      mask.set(i, j, raw(i, j) <= t);
    }
  }
  return mask;
}

}  // namespace rbin
