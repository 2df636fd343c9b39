#include "rbin/penalty.hpp"

#include <cmath>
#include <string>

namespace rbin {

double SymBand::at(std::size_t i, std::size_t j) const {
  const std::size_t lo = i < j ? i : j;
  const std::size_t d = i < j ? j - i : i - j;
  switch (d) {
    case 0: return d0_[lo];
    case 1: return d1_[lo];
    case 2: return d2_[lo];
    default: return 0.0;
  }
}

Vector SymBand::multiply(std::span<const double> x) const {
  const std::size_t n = size();
  if (x.size() != n) throw DimensionError("SymBand::multiply: size mismatch");
  Vector y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = d0_[i] * x[i];
    if (i + 1 < n) acc += d1_[i] * x[i + 1];
    if (i + 2 < n) acc += d2_[i] * x[i + 2];
    if (i >= 1) acc += d1_[i - 1] * x[i - 1];
    if (i >= 2) acc += d2_[i - 2] * x[i - 2];
    y[i] = acc;
  }
  return y;
}

double SymBand::quadratic(std::span<const double> x) const {
  const Vector y = multiply(x);
  double acc = 0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += x[i] * y[i];
  return acc;
}

void SymBand::add_scaled(const SymBand& other, double s) {
  if (other.size() != size()) throw DimensionError("SymBand::add_scaled: size mismatch");
  for (std::size_t i = 0; i < d0_.size(); ++i) d0_[i] += s * other.d0_[i];
  for (std::size_t i = 0; i < d1_.size(); ++i) d1_[i] += s * other.d1_[i];
  for (std::size_t i = 0; i < d2_.size(); ++i) d2_[i] += s * other.d2_[i];
}

void SymBand::add_identity(double s) {
  for (double& v : d0_) v += s;
}

void SymBand::add_diagonal(std::span<const double> d) {
  if (d.size() != size()) throw DimensionError("SymBand::add_diagonal: size mismatch");
  for (std::size_t i = 0; i < d0_.size(); ++i) d0_[i] += d[i];
}

Matrix SymBand::to_dense() const {
  const std::size_t n = size();
  Matrix a(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = (i >= 2 ? i - 2 : 0); j < n && j <= i + 2; ++j) a(i, j) = at(i, j);
  return a;
}

double SymBand::norm_inf() const {
  double best = 0;
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t j = (i >= 2 ? i - 2 : 0); j < n && j <= i + 2; ++j) s += std::abs(at(i, j));
    best = std::max(best, s);
  }
  return best;
}

PenaltyPair build_penalties(std::size_t m) {
  if (m < 3) throw DimensionError("build_penalties: need m >= 3, got " + std::to_string(m));
  PenaltyPair p{m, SymBand(m), SymBand(m)};
  // Accumulate D2'D2 and Dc'Dc one interior stencil row at a time; row r
  // touches columns r, r+1, r+2.
  for (std::size_t r = 0; r + 2 < m; ++r) {
    p.omega.diag(r) += 1.0;
    p.omega.diag(r + 1) += 4.0;
    p.omega.diag(r + 2) += 1.0;
    p.omega.sub1(r) += -2.0;
    p.omega.sub1(r + 1) += -2.0;
    p.omega.sub2(r) += 1.0;

    p.gamma.diag(r) += 0.25;
    p.gamma.diag(r + 2) += 0.25;
    p.gamma.sub2(r) += -0.25;
  }
  return p;
}

double second_difference_form(std::span<const double> u) {
  double s = 0;
  for (std::size_t i = 1; i + 1 < u.size(); ++i) {
    const double d = u[i - 1] - 2.0 * u[i] + u[i + 1];
    s += d * d;
  }
  return s;
}

double central_difference_form(std::span<const double> u) {
  double s = 0;
  for (std::size_t i = 1; i + 1 < u.size(); ++i) {
    const double d = 0.5 * (u[i + 1] - u[i - 1]);
    s += d * d;
  }
  return s;
}

CouplingScalars coupling_scalars(const PenaltyPair& pen, std::span<const double> v) {
  if (v.size() != pen.size) throw DimensionError("coupling_scalars: vector length does not match penalty size");
  CouplingScalars c;
  for (double x : v) c.sq_norm += x * x;
  c.omega_form = second_difference_form(v);
  c.gamma_form = central_difference_form(v);
  return c;
}

SymBand conditional_penalty(const PenaltyPair& pen_u, const CouplingScalars& c, double lambda) {
  if (lambda < 0) throw InvalidArgument("conditional_penalty: lambda must be non-negative");
  SymBand out(pen_u.size);
  out.add_scaled(pen_u.omega, lambda * c.sq_norm);
  out.add_identity(lambda * c.omega_form);
  out.add_scaled(pen_u.gamma, 2.0 * lambda * c.gamma_form);
  return out;
}

SymBand conditional_penalty(const PenaltyPair& pen_u, const PenaltyPair& pen_v, std::span<const double> v,
                            double lambda) {
  return conditional_penalty(pen_u, coupling_scalars(pen_v, v), lambda);
}

Vector solve_banded_spd(const BandedSpdSystem& sys) {
  const SymBand& a = sys.matrix;
  const std::size_t n = a.size();
  if (sys.rhs.size() != n) throw DimensionError("solve_banded_spd: rhs length mismatch");
  if (n == 0) return {};

  // L has bands l0 (diagonal), l1 (L(i+1,i)), l2 (L(i+2,i)).
  Vector l0(n), l1(n > 0 ? n - 1 : 0), l2(n > 1 ? n - 2 : 0);
  for (std::size_t i = 0; i < n; ++i) {
    double d = a.diag(i);
    if (i >= 2) {
      l2[i - 2] = a.sub2(i - 2) / l0[i - 2];
      d -= l2[i - 2] * l2[i - 2];
    }
    if (i >= 1) {
      double s = a.sub1(i - 1);
      if (i >= 2) s -= l2[i - 2] * l1[i - 2];
      l1[i - 1] = s / l0[i - 1];
      d -= l1[i - 1] * l1[i - 1];
    }
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw SingularSystemError("solve_banded_spd: non-positive pivot at row " + std::to_string(i));
    }
    l0[i] = std::sqrt(d);
  }

  auto substitute = [&](Vector x) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[i];
      if (i >= 1) s -= l1[i - 1] * x[i - 1];
      if (i >= 2) s -= l2[i - 2] * x[i - 2];
      x[i] = s / l0[i];
    }
    for (std::size_t k = n; k-- > 0;) {
      double s = x[k];
      if (k + 1 < n) s -= l1[k] * x[k + 1];
      if (k + 2 < n) s -= l2[k] * x[k + 2];
      x[k] = s / l0[k];
    }
    return x;
  };

  return substitute(sys.rhs);
}

}  // namespace rbin
