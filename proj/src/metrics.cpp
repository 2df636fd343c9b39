#include "rbin/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace rbin {

namespace {

void check_dims(const BinaryImage& pred, const BinaryImage& gt, const char* who) {
  if (!pred.same_shape(gt)) throw DimensionError(std::string(who) + ": prediction and ground truth differ in size");
}

// Squared 1-D distance transform of f (Felzenszwalb & Huttenlocher).
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<std::size_t>& v, std::vector<double>& z) {
  const std::size_t n = f.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::size_t k = 0;
  std::size_t first = n;
  for (std::size_t q = 0; q < n; ++q) {
    if (f[q] < inf) {
      first = q;
      break;
    }
  }
  if (first == n) {
    std::fill(d.begin(), d.end(), inf);
    return;
  }
  v[0] = first;
  z[0] = -inf;
  z[1] = inf;
  for (std::size_t q = first + 1; q < n; ++q) {
    if (!(f[q] < inf)) continue;
    const double fq = f[q] + static_cast<double>(q) * static_cast<double>(q);
    double s;
    while (true) {
      const double p = static_cast<double>(v[k]);
      s = (fq - (f[v[k]] + p * p)) / (2.0 * (static_cast<double>(q) - p));
      if (s <= z[k] && k > 0) {
        --k;
      } else {
        break;
      }
    }
    if (s <= z[k]) {  // k == 0 and the new parabola dominates everywhere
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[k + 1] < static_cast<double>(q)) ++k;
    const double diff = static_cast<double>(q) - static_cast<double>(v[k]);
    d[q] = diff * diff + f[v[k]];
  }
}

}  // namespace

ConfusionCounts confusion(const BinaryImage& pred, const BinaryImage& gt) {
  check_dims(pred, gt, "confusion");
  ConfusionCounts c;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    const bool p = pred.values()[k] != 0, g = gt.values()[k] != 0;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

BinaryImage contour(const BinaryImage& mask) {
  const std::size_t m = mask.rows(), n = mask.cols();
  BinaryImage out(m, n, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!mask(i, j)) continue;
      const bool edge = (i > 0 && !mask(i - 1, j)) || (i + 1 < m && !mask(i + 1, j)) || (j > 0 && !mask(i, j - 1)) ||
                        (j + 1 < n && !mask(i, j + 1));
      out.set(i, j, edge);
    }
  }
  return out;
}

Matrix distance_transform(const BinaryImage& sites) {
  const std::size_t m = sites.rows(), n = sites.cols();
  const double inf = std::numeric_limits<double>::infinity();
  Matrix sq(m, n, inf);
  const std::size_t len = std::max(m, n);
  std::vector<double> f, d;
  std::vector<std::size_t> v(len);
  std::vector<double> z(len + 1);
  // columns
  f.resize(m);
  d.resize(m);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) f[i] = sites(i, j) ? 0.0 : inf;
    edt_1d(f, d, v, z);
    for (std::size_t i = 0; i < m; ++i) sq(i, j) = d[i];
  }
  // rows
  f.resize(n);
  d.resize(n);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) f[j] = sq(i, j);
    edt_1d(f, d, v, z);
    for (std::size_t j = 0; j < n; ++j) sq(i, j) = std::sqrt(d[j]);
  }
  return sq;
}

FMeasure f_measure(const BinaryImage& pred, const BinaryImage& gt) {
  const ConfusionCounts c = confusion(pred, gt);
  if (c.tp + c.fn == 0) throw UndefinedMetricError("f_measure: ground truth has no foreground");
  FMeasure r;
  r.rc = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  r.pr = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  r.fm = r.rc + r.pr == 0 ? 0.0 : 2 * r.rc * r.pr / (r.rc + r.pr);
  return r;
}

double psnr(const BinaryImage& pred, const BinaryImage& gt) {
  const ConfusionCounts c = confusion(pred, gt);
  if (gt.size() == 0) throw UndefinedMetricError("psnr: empty image");
  const double mse = static_cast<double>(c.fp + c.fn) / static_cast<double>(gt.size());
  if (mse == 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double mpm(const BinaryImage& pred, const BinaryImage& gt) {
  check_dims(pred, gt, "mpm");
  const BinaryImage edge = contour(gt);
  if (edge.count() == 0) throw UndefinedMetricError("mpm: ground truth has no contour");
  const Matrix dist = distance_transform(edge);
  double err = 0, total = 0;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    const double d = dist.values()[k];
    total += d;
    if (pred.values()[k] != gt.values()[k]) err += d;
  }
  if (total == 0) return 0.0;  // every pixel is contour; only possible errors sit at distance 0
  return err / (2.0 * total);
}

std::array<std::array<double, 5>, 5> drd_weights() {
  std::array<std::array<double, 5>, 5> w{};
  double sum = 0;
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) {
      if (i == 2 && j == 2) continue;
      w[i][j] = 1.0 / std::hypot(i - 2, j - 2);
      sum += w[i][j];
    }
  }
  for (auto& row : w) {
    for (double& x : row) x /= sum;
  }
  return w;
}

std::size_t non_uniform_blocks(const BinaryImage& gt) {
  std::size_t count = 0;
  for (std::size_t bi = 0; bi < gt.rows(); bi += 8) {
    for (std::size_t bj = 0; bj < gt.cols(); bj += 8) {
      bool any0 = false, any1 = false;
      for (std::size_t i = bi; i < std::min(bi + 8, gt.rows()); ++i) {
        for (std::size_t j = bj; j < std::min(bj + 8, gt.cols()); ++j) (gt(i, j) ? any1 : any0) = true;
      }
      if (any0 && any1) ++count;
    }
  }
  return count;
}

double drd(const BinaryImage& pred, const BinaryImage& gt) {
  check_dims(pred, gt, "drd");
  const std::size_t nubn = non_uniform_blocks(gt);
  if (nubn == 0) throw UndefinedMetricError("drd: ground truth is uniform in every 8x8 block");
  const auto w = drd_weights();
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(gt.rows()), n = static_cast<std::ptrdiff_t>(gt.cols());
  double total = 0;
  for (std::ptrdiff_t i = 0; i < m; ++i) {
    for (std::ptrdiff_t j = 0; j < n; ++j) {
      const auto pv = pred(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      if (pv == gt(static_cast<std::size_t>(i), static_cast<std::size_t>(j))) continue;
      for (std::ptrdiff_t di = -2; di <= 2; ++di) {
        for (std::ptrdiff_t dj = -2; dj <= 2; ++dj) {
          const std::ptrdiff_t a = i + di, b = j + dj;
          if (a < 0 || b < 0 || a >= m || b >= n) continue;
          if (gt(static_cast<std::size_t>(a), static_cast<std::size_t>(b)) != pv) total += w[di + 2][dj + 2];
        }
      }
    }
  }
  return total / static_cast<double>(nubn);
}

double pseudo_f_measure(const BinaryImage& pred, const BinaryImage& gt) {
  const ConfusionCounts c = confusion(pred, gt);
  if (c.tp + c.fn == 0) throw UndefinedMetricError("pseudo_f_measure: ground truth has no foreground");
  if (c.tp == 0) return 0.0;
  const Matrix dist = distance_transform(contour(gt));
  double fn_cost = 0, fp_cost = 0;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    const bool p = pred.values()[k] != 0, g = gt.values()[k] != 0;
    if (p == g) continue;
    const double d = dist.values()[k];
    const double cost = 1.0 - 1.0 / (1.0 + d);
    (g ? fn_cost : fp_cost) += cost;
  }
  const double tp = static_cast<double>(c.tp);
  const double rc = tp / (tp + fn_cost), pr = tp / (tp + fp_cost);
  return 2 * rc * pr / (rc + pr);
}

MetricsReport evaluate(const BinaryImage& pred, const BinaryImage& gt) {
  MetricsReport r;
  r.counts = confusion(pred, gt);
  r.psnr = psnr(pred, gt);
  const bool has_fg = r.counts.tp + r.counts.fn > 0;
  if (has_fg) {
    r.fm = f_measure(pred, gt).fm;
    r.pfm = pseudo_f_measure(pred, gt);
  }
  if (contour(gt).count() > 0) r.mpm = mpm(pred, gt);
  if (non_uniform_blocks(gt) > 0) r.drd = drd(pred, gt);
  return r;
}

}  // namespace rbin
