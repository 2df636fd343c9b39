#include "rbin/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rbin/log.hpp"

namespace rbin {

SubtractedImage subtract_background(const Matrix& y, const Matrix& l) {
  if (!y.same_shape(l)) throw DimensionError("subtract_background: image and background differ in size");
  SubtractedImage out{Matrix(y.rows(), y.cols())};
  for (std::size_t k = 0; k < y.size(); ++k) out.values.values()[k] = y.values()[k] - l.values()[k];
  return out;
}

SubtractedImage subtract_background(const GrayImage& y, const BackgroundModel& l) {
  if (l.rows() != y.rows() || l.cols() != y.cols()) {
    throw DimensionError("subtract_background: image and background differ in size");
  }
  return subtract_background(y.pixels(), l.surface());
}

double gmdl_value(std::size_t n_count, std::size_t p_count, double rss, double fss, GmdlBranch* branch) {
  const double n = static_cast<double>(n_count);
  const double p = static_cast<double>(p_count);
  auto set = [&](GmdlBranch b) {
    if (branch) *branch = b;
  };
  const double null_score = fss > 0 ? 0.5 * n * std::log(fss / n) + 0.5 * std::log(n)
                                    : -std::numeric_limits<double>::infinity();
  if (p_count == 0) {
    set(GmdlBranch::kNull);
    return null_score;
  }
  if (p_count >= n_count || !(rss > 0)) {
    set(GmdlBranch::kDegenerate);
    return std::numeric_limits<double>::infinity();
  }
  // First branch iff RSS/(N-p) <= FSS/N; compared cross-multiplied.
  if (rss * n <= fss * (n - p)) {
    set(GmdlBranch::kFirst);
    return 0.5 * n * std::log(rss / (n - p)) + 0.5 * p * std::log((n - p) * fss / (p * rss)) + std::log(n);
  }
  set(GmdlBranch::kNull);
  return null_score;
}

GmdlEvaluation gmdl_score(double tau, const SubtractedImage& y) {
  const std::size_t n = y.values.size();
  if (n < 2) throw DimensionError("gmdl_score: need at least two pixels");
  GmdlEvaluation e;
  e.tau = tau;
  for (double x : y.values.values()) {
    e.fss += x * x;
    if (x <= tau) {
      ++e.p;
    } else {
      e.rss += x * x;
    }
  }
  e.gmdl = gmdl_value(n, e.p, e.rss, e.fss, &e.branch);
  return e;
}

ThresholdSelection select_threshold(const SubtractedImage& y, const ThresholdConfig& cfg) {
  const std::size_t n = y.values.size();
  if (n < 2) throw DimensionError("select_threshold: need at least two pixels");
  if (cfg.exact_cap < 1 || cfg.quantile_count < 2) throw InvalidArgument("select_threshold: bad candidate caps");

  std::vector<double> s(y.values.values().begin(), y.values.values().end());
  for (double x : s) {
    if (!std::isfinite(x)) throw InvalidArgument("select_threshold: non-finite value");
  }
  std::sort(s.begin(), s.end());

  // suffix[k] = sum of squares of s[k..n), accumulated from the top so that
  // RSS is exact when few pixels lie above tau.
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;) suffix[k] = suffix[k + 1] + s[k] * s[k];
  const double fss = suffix[0];

  // Candidate = index one past the last element <= tau.
  std::vector<std::size_t> cuts;
  for (std::size_t k = 0; k < n; ++k) {
    if (k + 1 == n || s[k + 1] != s[k]) cuts.push_back(k + 1);
  }
  ThresholdSelection sel;
  if (cuts.size() > cfg.exact_cap) {
    sel.exact = false;
    std::vector<std::size_t> q;
    q.reserve(cfg.quantile_count);
    for (std::size_t i = 0; i < cfg.quantile_count; ++i) {
      const std::size_t idx = static_cast<std::size_t>(
          std::llround(static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(cfg.quantile_count - 1)));
      // snap to the end of the run of equal values
      const std::size_t cut = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), s[idx]) - s.begin());
      if (q.empty() || q.back() != cut) q.push_back(cut);
    }
    cuts = std::move(q);
  }

  auto push = [&](double tau, std::size_t p) {
    GmdlEvaluation e;
    e.tau = tau;
    e.p = p;
    e.fss = fss;
    e.rss = suffix[p];
    e.gmdl = gmdl_value(n, p, e.rss, fss, &e.branch);
    sel.trace.push_back(e);
  };
  sel.trace.reserve(cuts.size() + 1);
  if (cfg.include_empty_model) push(std::nextafter(s.front(), -std::numeric_limits<double>::infinity()), 0);
  for (std::size_t cut : cuts) push(s[cut - 1], cut);

  // Candidates are in increasing tau, so strict < keeps the smaller tau on ties.
  sel.best = 0;
  for (std::size_t i = 1; i < sel.trace.size(); ++i) {
    if (sel.trace[i].gmdl < sel.trace[sel.best].gmdl) sel.best = i;
  }
  sel.tau = sel.trace[sel.best].tau;
  return sel;
}

BinaryImage apply_threshold(const Matrix& values, double tau) {
  std::vector<std::uint8_t> m(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) m[k] = values.values()[k] <= tau ? 1 : 0;
  return BinaryImage(values.rows(), values.cols(), std::move(m));
}

BinarizationResult binarize(const GrayImage& y, const BinarizeOptions& opt) {
  if (y.rows() < 3 || y.cols() < 3) throw DimensionError("binarize: image must be at least 3x3");
  const Scale target = opt.huber.fit_raw_scale ? Scale::kRaw : Scale::kUnit;
  GrayImage fit_input = y;
  if (y.scale() != target) fit_input = target == Scale::kUnit ? normalize(y) : denormalize(y);

  BinarizationResult res;
  res.fit_scale = target;
  res.model = estimate_background(fit_input, opt.huber);
  res.background = res.model.surface();
  res.subtracted = subtract_background(fit_input.pixels(), res.background);

  if (opt.selector == ThresholdSelector::kOtsu) {
    const auto [lo, hi] = std::minmax_element(res.subtracted.values.values().begin(), res.subtracted.values.values().end());
    OtsuResult o = otsu_values(res.subtracted.values, *lo, *hi);
    if (o.degenerate) log::warn("binarize: Otsu on the subtracted image is degenerate; empty mask");
    // Report tau as the largest value Otsu put in the foreground, so the
    // mask is exactly [Y~ <= tau].
    double tau = std::nextafter(*lo, -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < o.mask.size(); ++k) {
      if (o.mask.values()[k]) tau = std::max(tau, res.subtracted.values.values()[k]);
    }
    res.tau = tau;
  } else {
    ThresholdSelection sel = select_threshold(res.subtracted, opt.threshold);
    res.tau = sel.tau;
    res.gmdl_trace = std::move(sel.trace);
  }
  res.mask = apply_threshold(res.subtracted.values, res.tau);
  return res;
}

}  // namespace rbin
