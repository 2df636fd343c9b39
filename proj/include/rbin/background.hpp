#pragma once

#include <span>
#include <string>
#include <vector>

#include "rbin/image.hpp"
#include "rbin/kernels.hpp"
#include "rbin/matrix.hpp"
#include "rbin/penalty.hpp"

namespace rbin {

/// How the Huber cutoff is applied to residuals.
enum class ResidualScale {
  /// cutoff = delta * s, with s the neighbour-difference noise scale of the
  /// stage input (delta is in noise-standard-deviation units).
  kNoiseStandardized,
  /// cutoff = delta on whatever intensity scale the data is on.
  kAbsolute,
};

enum class ToleranceMode { kRelative, kAbsolute };

struct HuberConfig {
  double delta = 1.346;
  int max_irls_iters = 100;
  /// Inner stop: ||u_old v_old' - u v'||_F^2 <= tol_inner (times ||R||_F^2 when relative).
  double tol_inner = 1e-6;
  /// Stage stop: ||u_k||^2 ||v_k||^2 < tol_stage (times ||Y||_F^2 when relative).
  double tol_stage = 1e-6;
  int max_stages = 1;
  std::vector<double> lambda_grid{1e-4, 1e-2, 1.0, 1e2, 1e4};

  ToleranceMode inner_tolerance = ToleranceMode::kRelative;
  ToleranceMode stage_tolerance = ToleranceMode::kAbsolute;
  ResidualScale residual_scale = ResidualScale::kNoiseStandardized;
  /// false: W == 1 everywhere (plain penalized least squares).
  bool robust = true;
  /// binarize(): fit on the raw [0,255] intensities instead of [0,1].
  bool fit_raw_scale = false;
  /// Record the objective before/after each u- and v-solve.
  bool record_trace = false;
  kernels::Backend backend = kernels::Backend::kOpenMP;
  /// Fit the lambda grid concurrently (one task per grid value).
  bool parallel_lambda = true;

  void validate() const;
};

/// Objective values within one IRLS iteration, weights held fixed.
struct IrlsStep {
  double before_u = 0;
  double after_u = 0;
  double after_v = 0;
};

struct RankOneTerm {
  Vector u;
  Vector v;
  double lambda_used = 0;
  int irls_iters = 0;
  bool converged = false;
  /// f(u, v; lambda) at the returned iterate with weights recomputed there.
  double objective = 0;
  /// Huber cutoff used for this fit (delta times the residual scale).
  double cutoff = 0;
  std::vector<IrlsStep> trace;

  double energy() const;  // ||u||^2 ||v||^2
};

/// Residual and weights of a finished rank-one fit.
struct RobustFitState {
  Matrix residual;  // R^(k)
  Matrix weights;   // W, entries in (0, 1]
};

struct LambdaTrial {
  double lambda = 0;
  double objective = 0;
  int irls_iters = 0;
  bool failed = false;
  std::string error;
};

struct Stage {
  RankOneTerm term;
  std::vector<LambdaTrial> trials;
};

class BackgroundModel {
 public:
  BackgroundModel() = default;
  BackgroundModel(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t stage_count() const noexcept { return stages_.size(); }
  const std::vector<Stage>& stages() const noexcept { return stages_; }
  const RankOneTerm& term(std::size_t k) const { return stages_.at(k).term; }

  void append(Stage stage);

  /// L = sum_k u_k v_k' over the first `prefix` terms (all when omitted).
  Matrix surface() const;
  Matrix surface(std::size_t prefix) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Stage> stages_;
};

/// Elementwise Huber weights of a residual matrix: 1 where |r| <= delta,
/// delta / |r| elsewhere.
Matrix huber_weights(const Matrix& residual_fit, double delta);

/// f(u,v;lambda) = ||W^(1/2) o (R - u v')||_F^2 + lambda u'Om u v'v
///               + lambda v'On v u'u + 2 lambda u'Gm u v'Gn v.
double objective_f(std::span<const double> u, std::span<const double> v, const Matrix& r, const Matrix& w,
                   const PenaltyPair& pen_u, const PenaltyPair& pen_v, double lambda);

/// Minimizer of f over u with v and W fixed:
///   (diag(a) + lambda Omega_{u|v}) u = b,
/// a_i = sum_j W(i,j) v_j^2, b_i = sum_j W(i,j) R(i,j) v_j.
Vector update_u(const Matrix& r, const Matrix& w, std::span<const double> v, const PenaltyPair& pen_u,
                const PenaltyPair& pen_v, double lambda,
                const kernels::KernelSet& k = kernels::select(kernels::Backend::kSerial));

/// Minimizer of f over v with u and W fixed.
Vector update_v(const Matrix& r, const Matrix& w, std::span<const double> u, const PenaltyPair& pen_u,
                const PenaltyPair& pen_v, double lambda,
                const kernels::KernelSet& k = kernels::select(kernels::Backend::kSerial));

struct SingularPair {
  double sigma = 0;
  Vector u;  // unit left singular vector
  Vector v;  // unit right singular vector
};

/// Leading singular triplet by power iteration on R'R. Sign fixed so that
/// sum(u) >= 0. A zero matrix yields sigma = 0 and zero vectors.
SingularPair leading_singular_pair(const Matrix& r);

/// Iterative optimization for one stage: SVD start, then repeated
/// (weights, u-solve, v-solve) until the rank-one product stops moving.
RankOneTerm fit_rank_one(const Matrix& r, const HuberConfig& cfg, double lambda, RobustFitState* state = nullptr);
RankOneTerm fit_rank_one(const Matrix& r, const HuberConfig& cfg, double lambda, const PenaltyPair& pen_u,
                         const PenaltyPair& pen_v, RobustFitState* state = nullptr);

/// Fits every grid lambda and keeps the smallest final objective (ties go to
/// the larger lambda).
Stage select_lambda(const Matrix& r, const HuberConfig& cfg);

/// Boosting: R0 = Y; each stage fits a term to the current residual, deflates,
/// and stops once the term's energy falls below the stage tolerance (that
/// term is kept) or max_stages is reached.
BackgroundModel estimate_background(const Matrix& y, const HuberConfig& cfg, Matrix* final_residual = nullptr);
BackgroundModel estimate_background(const GrayImage& y, const HuberConfig& cfg);

}  // namespace rbin
