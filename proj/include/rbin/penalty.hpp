#pragma once

#include <span>

#include "rbin/matrix.hpp"

namespace rbin {

/// Symmetric banded matrix with two off-diagonals on each side (pentadiagonal).
/// Only the lower bands are stored: diag(i) = A(i,i), sub1(i) = A(i+1,i),
/// sub2(i) = A(i+2,i).
class SymBand {
 public:
  SymBand() = default;
  explicit SymBand(std::size_t n) : d0_(n, 0.0), d1_(n > 0 ? n - 1 : 0, 0.0), d2_(n > 1 ? n - 2 : 0, 0.0) {}

  std::size_t size() const noexcept { return d0_.size(); }

  double& diag(std::size_t i) { return d0_[i]; }
  double diag(std::size_t i) const { return d0_[i]; }
  double& sub1(std::size_t i) { return d1_[i]; }
  double sub1(std::size_t i) const { return d1_[i]; }
  double& sub2(std::size_t i) { return d2_[i]; }
  double sub2(std::size_t i) const { return d2_[i]; }

  /// Element (i, j) of the full symmetric matrix; zero outside the band.
  double at(std::size_t i, std::size_t j) const;

  Vector multiply(std::span<const double> x) const;
  double quadratic(std::span<const double> x) const;

  /// this += s * other
  void add_scaled(const SymBand& other, double s);
  void add_identity(double s);
  void add_diagonal(std::span<const double> d);

  Matrix to_dense() const;
  /// Max absolute row sum of the full symmetric matrix.
  double norm_inf() const;

 private:
  Vector d0_, d1_, d2_;
};

/// Second-difference (omega) and central-difference (gamma) quadratic forms on
/// one axis: u'Omega u = sum_{i=1}^{m-2} (u[i-1] - 2u[i] + u[i+1])^2 and
/// u'Gamma u = sum_{i=1}^{m-2} ((u[i+1] - u[i-1]) / 2)^2 (0-based interior).
struct PenaltyPair {
  std::size_t size = 0;
  SymBand omega;
  SymBand gamma;
};

PenaltyPair build_penalties(std::size_t m);

/// u'Omega u and u'Gamma u summed from the differences themselves. Same values
/// as SymBand::quadratic but without the cancellation of the expanded form,
/// which matters once lambda is large and u is smooth.
double second_difference_form(std::span<const double> u);
double central_difference_form(std::span<const double> u);

/// The three scalars that couple the two axes when one factor is held fixed:
/// v'v, v'Omega_n v, v'Gamma_n v.
struct CouplingScalars {
  double sq_norm = 0;
  double omega_form = 0;
  double gamma_form = 0;
};

CouplingScalars coupling_scalars(const PenaltyPair& pen, std::span<const double> v);

/// lambda * (v'v Omega_m + v'Omega_n v I_m + 2 v'Gamma_n v Gamma_m).
/// Swapping the arguments (pen_v, pen_u, u) yields lambda * Omega_{v|u}.
SymBand conditional_penalty(const PenaltyPair& pen_u, const PenaltyPair& pen_v, std::span<const double> v,
                            double lambda);

/// Same as above with the coupling scalars precomputed.
SymBand conditional_penalty(const PenaltyPair& pen_u, const CouplingScalars& c, double lambda);

struct BandedSpdSystem {
  SymBand matrix;
  Vector rhs;
};

/// Banded Cholesky (bandwidth 2) solve, O(m) time and memory.
/// Throws SingularSystemError on a non-positive pivot.
Vector solve_banded_spd(const BandedSpdSystem& sys);

}  // namespace rbin
