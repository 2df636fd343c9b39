#include "rbin/background.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <string>

#include "rbin/log.hpp"

namespace rbin {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double frobenius_sq(const Matrix& r) {
  double s = 0;
  for (double x : r.values()) s += x * x;
  return s;
}

// ||a b' - c d'||_F^2 without forming either product.
double rank_one_distance_sq(std::span<const double> a, std::span<const double> b, std::span<const double> c,
                            std::span<const double> d) {
  const double v = dot(a, a) * dot(b, b) - 2.0 * dot(a, c) * dot(b, d) + dot(c, c) * dot(d, d);
  return std::max(0.0, v);
}

bool all_zero(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double t) { return t == 0.0; });
}

// Floor for the residual scale so the cutoff stays positive on noise-free data.
constexpr double kScaleFloorFraction = 1e-3;

double huber_cutoff(const Matrix& r, const HuberConfig& cfg) {
  if (cfg.residual_scale == ResidualScale::kAbsolute) return cfg.delta;
  const double rms = std::sqrt(frobenius_sq(r) / static_cast<double>(std::max<std::size_t>(1, r.size())));
  double s = kernels::difference_noise_scale(r);
  s = std::max(s, kScaleFloorFraction * rms);
  if (!(s > 0)) s = 1.0;  // all-zero residual; weights are 1 anyway
  return cfg.delta * s;
}

}  // namespace

void HuberConfig::validate() const {
  if (!(delta > 0)) throw InvalidArgument("HuberConfig: delta must be positive");
  if (!(tol_inner > 0) || !(tol_stage > 0)) throw InvalidArgument("HuberConfig: tolerances must be positive");
  if (max_stages < 1) throw InvalidArgument("HuberConfig: max_stages must be >= 1");
  if (max_irls_iters < 1) throw InvalidArgument("HuberConfig: max_irls_iters must be >= 1");
  if (lambda_grid.empty()) throw InvalidArgument("HuberConfig: lambda grid is empty");
  for (double l : lambda_grid) {
    if (!(l > 0) || !std::isfinite(l)) throw InvalidArgument("HuberConfig: lambda grid values must be positive");
  }
}

double RankOneTerm::energy() const { return dot(u, u) * dot(v, v); }

void BackgroundModel::append(Stage stage) {
  if (stage.term.u.size() != rows_ || stage.term.v.size() != cols_) {
    throw DimensionError("BackgroundModel::append: term dimensions do not match the model");
  }
  stages_.push_back(std::move(stage));
}

Matrix BackgroundModel::surface() const { return surface(stages_.size()); }

Matrix BackgroundModel::surface(std::size_t prefix) const {
  Matrix l(rows_, cols_, 0.0);
  prefix = std::min(prefix, stages_.size());
  for (std::size_t k = 0; k < prefix; ++k) {
    const auto& t = stages_[k].term;
    for (std::size_t i = 0; i < rows_; ++i) {
      auto row = l.row(i);
      for (std::size_t j = 0; j < cols_; ++j) row[j] += t.u[i] * t.v[j];
    }
  }
  return l;
}

Matrix huber_weights(const Matrix& residual_fit, double delta) {
  if (!(delta > 0)) throw InvalidArgument("huber_weights: delta must be positive");
  Matrix w(residual_fit.rows(), residual_fit.cols());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double e = std::abs(residual_fit.values()[k]);
    w.values()[k] = e <= delta ? 1.0 : delta / e;
  }
  return w;
}

double objective_f(std::span<const double> u, std::span<const double> v, const Matrix& r, const Matrix& w,
                   const PenaltyPair& pen_u, const PenaltyPair& pen_v, double lambda) {
  if (u.size() != r.rows() || v.size() != r.cols() || !w.same_shape(r) || pen_u.size != u.size() ||
      pen_v.size != v.size()) {
    throw DimensionError("objective_f: inconsistent dimensions");
  }
  const double data = kernels::serial::weighted_sse(r, w, u, v);
  if (lambda == 0.0) return data;
  const double uu = dot(u, u), vv = dot(v, v);
  const double u_om = second_difference_form(u), v_om = second_difference_form(v);
  const double u_ga = central_difference_form(u), v_ga = central_difference_form(v);
  return data + lambda * (u_om * vv + v_om * uu + 2.0 * u_ga * v_ga);
}

Vector update_u(const Matrix& r, const Matrix& w, std::span<const double> v, const PenaltyPair& pen_u,
                const PenaltyPair& pen_v, double lambda, const kernels::KernelSet& k) {
  if (v.size() != r.cols() || pen_u.size != r.rows() || pen_v.size != r.cols() || !w.same_shape(r)) {
    throw DimensionError("update_u: inconsistent dimensions");
  }
  Vector a(r.rows()), b(r.rows());
  k.row_normal(r, w, v, a, b);
  BandedSpdSystem sys{conditional_penalty(pen_u, pen_v, v, lambda), std::move(b)};
  sys.matrix.add_diagonal(a);
  return solve_banded_spd(sys);
}

Vector update_v(const Matrix& r, const Matrix& w, std::span<const double> u, const PenaltyPair& pen_u,
                const PenaltyPair& pen_v, double lambda, const kernels::KernelSet& k) {
  if (u.size() != r.rows() || pen_u.size != r.rows() || pen_v.size != r.cols() || !w.same_shape(r)) {
    throw DimensionError("update_v: inconsistent dimensions");
  }
  Vector a(r.cols()), b(r.cols());
  k.col_normal(r, w, u, a, b);
  BandedSpdSystem sys{conditional_penalty(pen_v, pen_u, u, lambda), std::move(b)};
  sys.matrix.add_diagonal(a);
  return solve_banded_spd(sys);
}

SingularPair leading_singular_pair(const Matrix& r) {
  const std::size_t m = r.rows(), n = r.cols();
  SingularPair out{0.0, Vector(m, 0.0), Vector(n, 0.0)};
  if (m == 0 || n == 0) return out;

  // Start from the row of largest norm; it cannot be orthogonal to the
  // leading right singular vector unless R is zero.
  std::size_t best_row = 0;
  double best_norm = -1;
  for (std::size_t i = 0; i < m; ++i) {
    const double s = dot(r.row(i), r.row(i));
    if (s > best_norm) {
      best_norm = s;
      best_row = i;
    }
  }
  if (!(best_norm > 0)) return out;

  Vector v(r.row(best_row).begin(), r.row(best_row).end());
  double nv = std::sqrt(dot(v, v));
  for (double& x : v) x /= nv;

  Vector ru(m), rtv(n);
  double sigma = 0;
  constexpr int kMaxIter = 300;
  for (int it = 0; it < kMaxIter; ++it) {
    for (std::size_t i = 0; i < m; ++i) ru[i] = dot(r.row(i), v);
    std::fill(rtv.begin(), rtv.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const auto row = r.row(i);
      for (std::size_t j = 0; j < n; ++j) rtv[j] += row[j] * ru[i];
    }
    const double norm = std::sqrt(dot(rtv, rtv));
    if (!(norm > 0)) return out;
    double change = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const double nj = rtv[j] / norm;
      change = std::max(change, std::abs(nj - v[j]));
      v[j] = nj;
    }
    const double s_new = std::sqrt(norm);
    const bool settled = std::abs(s_new - sigma) <= 1e-14 * s_new && change <= 1e-12;
    sigma = s_new;
    if (settled) break;
  }
  for (std::size_t i = 0; i < m; ++i) ru[i] = dot(r.row(i), v);
  sigma = std::sqrt(dot(ru, ru));
  if (!(sigma > 0)) return out;
  out.sigma = sigma;
  out.v = v;
  out.u.resize(m);
  for (std::size_t i = 0; i < m; ++i) out.u[i] = ru[i] / sigma;
  if (std::accumulate(out.u.begin(), out.u.end(), 0.0) < 0) {
    for (double& x : out.u) x = -x;
    for (double& x : out.v) x = -x;
  }
  return out;
}

RankOneTerm fit_rank_one(const Matrix& r, const HuberConfig& cfg, double lambda, RobustFitState* state) {
  if (r.rows() < 3 || r.cols() < 3) throw DimensionError("fit_rank_one: image must be at least 3x3");
  return fit_rank_one(r, cfg, lambda, build_penalties(r.rows()), build_penalties(r.cols()), state);
}

RankOneTerm fit_rank_one(const Matrix& r, const HuberConfig& cfg, double lambda, const PenaltyPair& pen_u,
                         const PenaltyPair& pen_v, RobustFitState* state) {
  if (r.rows() < 3 || r.cols() < 3) throw DimensionError("fit_rank_one: image must be at least 3x3");
  if (pen_u.size != r.rows() || pen_v.size != r.cols()) throw DimensionError("fit_rank_one: penalty size mismatch");
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw InvalidArgument("fit_rank_one: lambda must be non-negative");
  for (double x : r.values()) {
    if (!std::isfinite(x)) throw InvalidArgument("fit_rank_one: residual contains non-finite values");
  }

  const kernels::KernelSet& k = kernels::select(cfg.backend);
  const std::size_t m = r.rows(), n = r.cols();
  const double cutoff = cfg.robust ? huber_cutoff(r, cfg) : 0.0;
  Matrix w(m, n, 1.0);
  auto refresh_weights = [&](std::span<const double> u, std::span<const double> v) {
    if (cfg.robust) k.huber_weights(r, u, v, cutoff, w);
  };

  RankOneTerm term;
  term.lambda_used = lambda;
  term.cutoff = cutoff;

  const SingularPair init = leading_singular_pair(r);
  const double root = std::sqrt(init.sigma);
  Vector u(m), v(n);
  for (std::size_t i = 0; i < m; ++i) u[i] = root * init.u[i];
  for (std::size_t j = 0; j < n; ++j) v[j] = root * init.v[j];
  Vector u_old(m, 0.0), v_old(n, 0.0);

  const double tol = cfg.inner_tolerance == ToleranceMode::kRelative ? cfg.tol_inner * frobenius_sq(r) : cfg.tol_inner;

  try {
    int iters = 0;
    while (rank_one_distance_sq(u_old, v_old, u, v) > tol && iters < cfg.max_irls_iters) {
      refresh_weights(u, v);
      IrlsStep step;
      if (cfg.record_trace) step.before_u = objective_f(u, v, r, w, pen_u, pen_v, lambda);

      u_old = u;
      u = update_u(r, w, v, pen_u, pen_v, lambda, k);
      if (cfg.record_trace) step.after_u = objective_f(u, v, r, w, pen_u, pen_v, lambda);

      v_old = v;
      if (all_zero(u)) {
        std::fill(v.begin(), v.end(), 0.0);
      } else {
        v = update_v(r, w, u, pen_u, pen_v, lambda, k);
      }
      if (cfg.record_trace) {
        step.after_v = objective_f(u, v, r, w, pen_u, pen_v, lambda);
        term.trace.push_back(step);
      }
      ++iters;
      if (all_zero(v)) std::fill(u.begin(), u.end(), 0.0);
    }
    term.irls_iters = iters;
    term.converged = rank_one_distance_sq(u_old, v_old, u, v) <= tol;
  } catch (const SingularSystemError& e) {
    throw DegenerateFitError(std::string("fit_rank_one: ") + e.what() + " (lambda=" + std::to_string(lambda) + ")");
  }

  if (std::accumulate(u.begin(), u.end(), 0.0) < 0) {
    for (double& x : u) x = -x;
    for (double& x : v) x = -x;
  }
  refresh_weights(u, v);
  term.objective = objective_f(u, v, r, w, pen_u, pen_v, lambda);
  term.u = std::move(u);
  term.v = std::move(v);
  if (state) {
    state->residual = r;
    state->weights = w;
  }
  return term;
}

Stage select_lambda(const Matrix& r, const HuberConfig& cfg) {
  cfg.validate();
  if (r.rows() < 3 || r.cols() < 3) throw DimensionError("select_lambda: image must be at least 3x3");
  const PenaltyPair pen_u = build_penalties(r.rows());
  const PenaltyPair pen_v = build_penalties(r.cols());
  const std::size_t g = cfg.lambda_grid.size();

  struct Outcome {
    RankOneTerm term;
    std::string error;
  };
  auto run = [&](double lambda, const HuberConfig& c) {
    Outcome o;
    try {
      o.term = fit_rank_one(r, c, lambda, pen_u, pen_v);
    } catch (const Error& e) {
      o.error = e.what();
    }
    return o;
  };

  std::vector<Outcome> outcomes(g);
  if (cfg.parallel_lambda && g > 1) {
    // Grid values run as independent tasks with the serial kernels; the
    // kernels are bit-identical so the schedule does not affect the result.
    HuberConfig task_cfg = cfg;
    task_cfg.backend = kernels::Backend::kSerial;
    std::vector<std::future<Outcome>> futures;
    futures.reserve(g);
    for (double lambda : cfg.lambda_grid) {
      futures.push_back(std::async(std::launch::async, run, lambda, std::cref(task_cfg)));
    }
    for (std::size_t i = 0; i < g; ++i) outcomes[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < g; ++i) outcomes[i] = run(cfg.lambda_grid[i], cfg);
  }

  Stage stage;
  std::ptrdiff_t best = -1;
  for (std::size_t i = 0; i < g; ++i) {
    LambdaTrial trial{cfg.lambda_grid[i], outcomes[i].term.objective, outcomes[i].term.irls_iters,
                      !outcomes[i].error.empty(), outcomes[i].error};
    stage.trials.push_back(trial);
    if (trial.failed) {
      log::warn("lambda " + std::to_string(trial.lambda) + " failed: " + trial.error);
      continue;
    }
    if (best < 0) {
      best = static_cast<std::ptrdiff_t>(i);
      continue;
    }
    const auto& cur = outcomes[static_cast<std::size_t>(best)].term;
    const double obj = outcomes[i].term.objective;
    if (obj < cur.objective || (obj == cur.objective && cfg.lambda_grid[i] > cur.lambda_used)) {
      best = static_cast<std::ptrdiff_t>(i);
    }
  }
  if (best < 0) throw DegenerateFitError("select_lambda: every grid lambda failed");
  stage.term = std::move(outcomes[static_cast<std::size_t>(best)].term);
  return stage;
}

BackgroundModel estimate_background(const Matrix& y, const HuberConfig& cfg, Matrix* final_residual) {
  cfg.validate();
  if (y.rows() < 3 || y.cols() < 3) throw DimensionError("estimate_background: image must be at least 3x3");
  const kernels::KernelSet& k = kernels::select(cfg.backend);
  BackgroundModel model(y.rows(), y.cols());
  Matrix r = y;
  const double stop =
      cfg.stage_tolerance == ToleranceMode::kRelative ? cfg.tol_stage * frobenius_sq(y) : cfg.tol_stage;
  for (int stage_index = 0; stage_index < cfg.max_stages; ++stage_index) {
    Stage stage = select_lambda(r, cfg);
    k.deflate(r, stage.term.u, stage.term.v);
    const double energy = stage.term.energy();
    log::debug("stage " + std::to_string(stage_index + 1) + ": lambda=" + std::to_string(stage.term.lambda_used) +
               " energy=" + std::to_string(energy) + " iters=" + std::to_string(stage.term.irls_iters));
    model.append(std::move(stage));
    if (energy < stop) break;
  }
  if (final_residual) *final_residual = std::move(r);
  return model;
}

BackgroundModel estimate_background(const GrayImage& y, const HuberConfig& cfg) {
  return estimate_background(y.pixels(), cfg);
}

}  // namespace rbin
