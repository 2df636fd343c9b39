#include <algorithm>
#include <cmath>

#include "rbin/kernels.hpp"

namespace rbin::kernels {

namespace {
void check(const Matrix& r, std::size_t u, std::size_t v) {
  if (r.rows() != u || r.cols() != v) throw DimensionError("kernel: factor lengths do not match the matrix");
}
}  // namespace

namespace serial {

void huber_weights(const Matrix& r, std::span<const double> u, std::span<const double> v, double cutoff,
                   Matrix& w) {
  check(r, u.size(), v.size());
  if (!w.same_shape(r)) w = Matrix(r.rows(), r.cols());
  for (std::size_t i = 0; i < r.rows(); ++i) {
    const auto rr = r.row(i);
    auto wr = w.row(i);
    for (std::size_t j = 0; j < r.cols(); ++j) {
      const double e = std::abs(rr[j] - u[i] * v[j]);
      wr[j] = e <= cutoff ? 1.0 : cutoff / e;
    }
  }
}

void row_normal(const Matrix& r, const Matrix& w, std::span<const double> v, std::span<double> a,
                std::span<double> b) {
  check(r, a.size(), v.size());
  for (std::size_t i = 0; i < r.rows(); ++i) {
    const auto rr = r.row(i);
    const auto wr = w.row(i);
    double sa = 0, sb = 0;
    for (std::size_t j = 0; j < r.cols(); ++j) {
      sa += wr[j] * v[j] * v[j];
      sb += wr[j] * rr[j] * v[j];
    }
    a[i] = sa;
    b[i] = sb;
  }
}

void col_normal(const Matrix& r, const Matrix& w, std::span<const double> u, std::span<double> a,
                std::span<double> b) {
  check(r, u.size(), a.size());
  std::fill(a.begin(), a.end(), 0.0);
  std::fill(b.begin(), b.end(), 0.0);
  for (std::size_t i = 0; i < r.rows(); ++i) {
    const auto rr = r.row(i);
    const auto wr = w.row(i);
    const double ui = u[i];
    for (std::size_t j = 0; j < r.cols(); ++j) {
      a[j] += wr[j] * ui * ui;
      b[j] += wr[j] * rr[j] * ui;
    }
  }
}

double weighted_sse(const Matrix& r, const Matrix& w, std::span<const double> u, std::span<const double> v) {
  check(r, u.size(), v.size());
  double total = 0;
  for (std::size_t i = 0; i < r.rows(); ++i) {
    const auto rr = r.row(i);
    const auto wr = w.row(i);
    double s = 0;
    for (std::size_t j = 0; j < r.cols(); ++j) {
      const double e = rr[j] - u[i] * v[j];
      s += wr[j] * e * e;
    }
    total += s;
  }
  return total;
}

void deflate(Matrix& r, std::span<const double> u, std::span<const double> v) {
  check(r, u.size(), v.size());
  for (std::size_t i = 0; i < r.rows(); ++i) {
    auto rr = r.row(i);
    for (std::size_t j = 0; j < r.cols(); ++j) rr[j] -= u[i] * v[j];
  }
}

}  // namespace serial

const KernelSet& select(Backend backend) noexcept {
  static const KernelSet kSerial{serial::huber_weights, serial::row_normal, serial::col_normal,
                                 serial::weighted_sse, serial::deflate};
#ifdef RBIN_HAVE_OPENMP
  static const KernelSet kOmp{omp::huber_weights, omp::row_normal, omp::col_normal, omp::weighted_sse,
                              omp::deflate};
  if (backend == Backend::kOpenMP) return kOmp;
#else
  (void)backend;
#endif
  return kSerial;
}

bool openmp_available() noexcept {
#ifdef RBIN_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

double difference_noise_scale(const Matrix& r) {
  std::vector<double> d;
  d.reserve(2 * r.size());
  for (std::size_t i = 0; i < r.rows(); ++i) {
    for (std::size_t j = 0; j < r.cols(); ++j) {
      if (j + 1 < r.cols()) d.push_back(r(i, j + 1) - r(i, j));
      if (i + 1 < r.rows()) d.push_back(r(i + 1, j) - r(i, j));
    }
  }
  if (d.empty()) return 0.0;
  auto median = [](std::vector<double>& x) {
    const auto mid = x.begin() + static_cast<std::ptrdiff_t>(x.size() / 2);
    std::nth_element(x.begin(), mid, x.end());
    return *mid;
  };
  const double center = median(d);
  for (double& x : d) x = std::abs(x - center);
  return 1.4826 * median(d) / std::sqrt(2.0);
}

}  // namespace rbin::kernels
