#include <cmath>
#include <vector>

#include "rbin/kernels.hpp"

#ifdef RBIN_HAVE_OPENMP
#include <omp.h>

namespace rbin::kernels::omp {

namespace {
void check(const Matrix& r, std::size_t u, std::size_t v) {
  if (r.rows() != u || r.cols() != v) throw DimensionError("kernel: factor lengths do not match the matrix");
}
using Index = std::ptrdiff_t;
}  // namespace

void huber_weights(const Matrix& r, std::span<const double> u, std::span<const double> v, double cutoff,
                   Matrix& w) {
  check(r, u.size(), v.size());
  if (!w.same_shape(r)) w = Matrix(r.rows(), r.cols());
  const Index m = static_cast<Index>(r.rows());
  const std::size_t n = r.cols();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    const auto rr = r.row(static_cast<std::size_t>(i));
    auto wr = w.row(static_cast<std::size_t>(i));
    const double ui = u[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < n; ++j) {
      const double e = std::abs(rr[j] - ui * v[j]);
      wr[j] = e <= cutoff ? 1.0 : cutoff / e;
    }
  }
}

void row_normal(const Matrix& r, const Matrix& w, std::span<const double> v, std::span<double> a,
                std::span<double> b) {
  check(r, a.size(), v.size());
  const Index m = static_cast<Index>(r.rows());
  const std::size_t n = r.cols();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    const auto rr = r.row(static_cast<std::size_t>(i));
    const auto wr = w.row(static_cast<std::size_t>(i));
    double sa = 0, sb = 0;
    for (std::size_t j = 0; j < n; ++j) {
      sa += wr[j] * v[j] * v[j];
      sb += wr[j] * rr[j] * v[j];
    }
    a[static_cast<std::size_t>(i)] = sa;
    b[static_cast<std::size_t>(i)] = sb;
  }
}

void col_normal(const Matrix& r, const Matrix& w, std::span<const double> u, std::span<double> a,
                std::span<double> b) {
  check(r, u.size(), a.size());
  const std::size_t m = r.rows();
  const Index n = static_cast<Index>(r.cols());
  constexpr Index kBlock = 64;
  // Each thread owns a block of columns and walks all rows in order, so every
  // a_j, b_j sees the same summation order as the serial kernel.
#pragma omp parallel for schedule(static)
  for (Index j0 = 0; j0 < n; j0 += kBlock) {
    const Index j1 = std::min(n, j0 + kBlock);
    for (Index j = j0; j < j1; ++j) {
      a[static_cast<std::size_t>(j)] = 0.0;
      b[static_cast<std::size_t>(j)] = 0.0;
    }
    for (std::size_t i = 0; i < m; ++i) {
      const auto rr = r.row(i);
      const auto wr = w.row(i);
      const double ui = u[i];
      for (Index j = j0; j < j1; ++j) {
        const auto jj = static_cast<std::size_t>(j);
        a[jj] += wr[jj] * ui * ui;
        b[jj] += wr[jj] * rr[jj] * ui;
      }
    }
  }
}

double weighted_sse(const Matrix& r, const Matrix& w, std::span<const double> u, std::span<const double> v) {
  check(r, u.size(), v.size());
  const Index m = static_cast<Index>(r.rows());
  const std::size_t n = r.cols();
  std::vector<double> partial(r.rows(), 0.0);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    const auto rr = r.row(ii);
    const auto wr = w.row(ii);
    double s = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double e = rr[j] - u[ii] * v[j];
      s += wr[j] * e * e;
    }
    partial[ii] = s;
  }
  double total = 0;
  for (double s : partial) total += s;
  return total;
}

void deflate(Matrix& r, std::span<const double> u, std::span<const double> v) {
  check(r, u.size(), v.size());
  const Index m = static_cast<Index>(r.rows());
  const std::size_t n = r.cols();
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < m; ++i) {
    auto rr = r.row(static_cast<std::size_t>(i));
    const double ui = u[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < n; ++j) rr[j] -= ui * v[j];
  }
}

}  // namespace rbin::kernels::omp

#else

namespace rbin::kernels::omp {
void huber_weights(const Matrix& r, std::span<const double> u, std::span<const double> v, double cutoff,
                   Matrix& w) {
  serial::huber_weights(r, u, v, cutoff, w);
}
void row_normal(const Matrix& r, const Matrix& w, std::span<const double> v, std::span<double> a,
                std::span<double> b) {
  serial::row_normal(r, w, v, a, b);
}
void col_normal(const Matrix& r, const Matrix& w, std::span<const double> u, std::span<double> a,
                std::span<double> b) {
  serial::col_normal(r, w, u, a, b);
}
double weighted_sse(const Matrix& r, const Matrix& w, std::span<const double> u, std::span<const double> v) {
  return serial::weighted_sse(r, w, u, v);
}
void deflate(Matrix& r, std::span<const double> u, std::span<const double> v) { serial::deflate(r, u, v); }
}  // namespace rbin::kernels::omp

#endif
