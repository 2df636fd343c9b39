#pragma once

// Data-parallel inner loops of the robust fit. Two implementations share one
// signature set: `serial` is the reference, `omp` parallelizes over rows (or
// column blocks) without changing the per-element summation order, so both
// produce bit-identical results.

#include <span>

#include "rbin/matrix.hpp"

namespace rbin::kernels {

enum class Backend { kSerial, kOpenMP };

/// W(i,j) = 1 if |R(i,j) - u_i v_j| <= cutoff, else cutoff / |R(i,j) - u_i v_j|.
using HuberWeightsFn = void (*)(const Matrix& r, std::span<const double> u, std::span<const double> v,
                                double cutoff, Matrix& w);
/// a_i = sum_j W(i,j) v_j^2,  b_i = sum_j W(i,j) R(i,j) v_j.
using RowNormalFn = void (*)(const Matrix& r, const Matrix& w, std::span<const double> v, std::span<double> a,
                             std::span<double> b);
/// a_j = sum_i W(i,j) u_i^2,  b_j = sum_i W(i,j) R(i,j) u_i.
using ColNormalFn = void (*)(const Matrix& r, const Matrix& w, std::span<const double> u, std::span<double> a,
                             std::span<double> b);
/// sum_ij W(i,j) (R(i,j) - u_i v_j)^2, accumulated per row then across rows.
using WeightedSseFn = double (*)(const Matrix& r, const Matrix& w, std::span<const double> u,
                                 std::span<const double> v);
/// R -= u v'.
using DeflateFn = void (*)(Matrix& r, std::span<const double> u, std::span<const double> v);

struct KernelSet {
  HuberWeightsFn huber_weights;
  RowNormalFn row_normal;
  ColNormalFn col_normal;
  WeightedSseFn weighted_sse;
  DeflateFn deflate;
};

namespace serial {
void huber_weights(const Matrix& r, std::span<const double> u, std::span<const double> v, double cutoff,
                   Matrix& w);
void row_normal(const Matrix& r, const Matrix& w, std::span<const double> v, std::span<double> a,
                std::span<double> b);
void col_normal(const Matrix& r, const Matrix& w, std::span<const double> u, std::span<double> a,
                std::span<double> b);
double weighted_sse(const Matrix& r, const Matrix& w, std::span<const double> u, std::span<const double> v);
void deflate(Matrix& r, std::span<const double> u, std::span<const double> v);
}  // namespace serial

namespace omp {
void huber_weights(const Matrix& r, std::span<const double> u, std::span<const double> v, double cutoff,
                   Matrix& w);
void row_normal(const Matrix& r, const Matrix& w, std::span<const double> v, std::span<double> a,
                std::span<double> b);
void col_normal(const Matrix& r, const Matrix& w, std::span<const double> u, std::span<double> a,
                std::span<double> b);
double weighted_sse(const Matrix& r, const Matrix& w, std::span<const double> u, std::span<const double> v);
void deflate(Matrix& r, std::span<const double> u, std::span<const double> v);
}  // namespace omp

/// kOpenMP falls back to the serial set when the build has no OpenMP.
const KernelSet& select(Backend backend) noexcept;
bool openmp_available() noexcept;

/// Robust pixel-noise scale: 1.4826 * MAD of all horizontal and vertical
/// neighbour differences, divided by sqrt(2). Smooth trends and sparse edges
/// barely move it.
double difference_noise_scale(const Matrix& r);

}  // namespace rbin::kernels
