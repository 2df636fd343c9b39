// rbin: binarize images, evaluate against ground truth, generate test scenes.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "rbin/harness.hpp"
#include "rbin/log.hpp"

namespace fs = std::filesystem;
using namespace rbin;
using harness::Method;

namespace {

struct FitFlags {
  std::vector<double> lambda_grid;
  double delta = 0;
  int max_stages = 0;
  int max_iters = 0;
  double tol_inner = 0, tol_stage = 0;
  bool absolute_scale = false;
  bool plain_ls = false;
  bool raw_scale = false;
  bool serial = false;
  std::string selector = "gmdl";
  std::size_t exact_cap = 0, quantiles = 0;
  bool no_empty_model = false;
  int window = 25;
  double k = -0.2;
  bool invert = false;

  std::vector<CLI::Option*> proposed_opts, window_opts, niblack_opts;
};

void add_fit_flags(CLI::App* app, FitFlags& f) {
  auto& p = f.proposed_opts;
  p.push_back(app->add_option("--lambda-grid", f.lambda_grid, "Smoothing grid searched at every stage")->delimiter(','));
  p.push_back(app->add_option("--delta", f.delta, "Huber cutoff in noise-sigma units (default 1.346)"));
  p.push_back(app->add_option("--max-stages", f.max_stages, "Boosting stages (default 1)"));
  p.push_back(app->add_option("--max-iters", f.max_iters, "Reweighting iterations per fit (default 100)"));
  p.push_back(app->add_option("--inner-tol", f.tol_inner, "Relative inner stop (default 1e-6)"));
  p.push_back(app->add_option("--stage-tol", f.tol_stage, "Stage energy stop (default 1e-6)"));
  p.push_back(app->add_flag("--absolute-delta", f.absolute_scale, "Apply delta directly to residuals"));
  p.push_back(app->add_flag("--no-robust", f.plain_ls, "Unit weights (plain penalized least squares)"));
  p.push_back(app->add_flag("--raw-scale", f.raw_scale, "Fit on 0-255 intensities"));
  p.push_back(app->add_option("--selector", f.selector, "Threshold selector on Y-L")->check(CLI::IsMember({"gmdl", "otsu"})));
  p.push_back(app->add_option("--exact-cap", f.exact_cap, "Exhaustive threshold search up to this many unique values"));
  p.push_back(app->add_option("--quantiles", f.quantiles, "Quantile candidates beyond the exact cap"));
  p.push_back(app->add_flag("--no-empty-model", f.no_empty_model, "Do not score the empty mask"));
  app->add_flag("--serial", f.serial, "Use the serial kernels");
  f.window_opts.push_back(app->add_option("--window", f.window, "Window size for niblack/sauvola (odd)"));
  f.niblack_opts.push_back(app->add_option("--k", f.k, "Niblack k"));
  app->add_flag("--invert", f.invert, "Foreground is lighter than the background");
}

bool any_given(const std::vector<CLI::Option*>& opts) {
  for (auto* o : opts) {
    if (o->count() > 0) return true;
  }
  return false;
}

void check_method_flags(const FitFlags& f, const std::vector<Method>& methods) {
  auto uses = [&](std::initializer_list<Method> ms) {
    for (Method m : methods) {
      for (Method x : ms) {
        if (m == x) return true;
      }
    }
    return false;
  };
  if (any_given(f.proposed_opts) && !uses({Method::kProposed})) {
    throw InvalidArgument("background-fit options only apply to --method proposed");
  }
  if (any_given(f.window_opts) && !uses({Method::kNiblack, Method::kSauvola})) {
    throw InvalidArgument("--window only applies to niblack and sauvola");
  }
  if (any_given(f.niblack_opts) && !uses({Method::kNiblack})) throw InvalidArgument("--k only applies to niblack");
}

harness::RunConfig make_config(const FitFlags& f) {
  harness::RunConfig cfg;
  HuberConfig& h = cfg.proposed.huber;
  if (!f.lambda_grid.empty()) h.lambda_grid = f.lambda_grid;
  if (f.delta != 0) h.delta = f.delta;
  if (f.max_stages != 0) h.max_stages = f.max_stages;
  if (f.max_iters != 0) h.max_irls_iters = f.max_iters;
  if (f.tol_inner != 0) h.tol_inner = f.tol_inner;
  if (f.tol_stage != 0) h.tol_stage = f.tol_stage;
  if (f.absolute_scale) h.residual_scale = ResidualScale::kAbsolute;
  h.robust = !f.plain_ls;
  h.fit_raw_scale = f.raw_scale;
  if (f.serial) {
    h.backend = kernels::Backend::kSerial;
    h.parallel_lambda = false;
  }
  h.validate();
  cfg.proposed.selector = f.selector == "otsu" ? ThresholdSelector::kOtsu : ThresholdSelector::kGmdl;
  if (f.exact_cap != 0) cfg.proposed.threshold.exact_cap = f.exact_cap;
  if (f.quantiles != 0) cfg.proposed.threshold.quantile_count = f.quantiles;
  cfg.proposed.threshold.include_empty_model = !f.no_empty_model;
  if (f.window < 3 || f.window % 2 == 0) throw InvalidArgument("--window must be odd and >= 3");
  cfg.window = f.window;
  cfg.niblack_k = f.k;
  cfg.polarity = f.invert ? harness::Polarity::kLightForeground : harness::Polarity::kDarkForeground;
  return cfg;
}

int exit_code(const Error& e) { return static_cast<int>(e.kind()); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Background-subtraction binarization and evaluation"};
  app.require_subcommand(1);

  // binarize
  FitFlags bf;
  std::string b_input, b_method = "proposed", b_out = ".";
  auto* bin = app.add_subcommand("binarize", "Binarize one image");
  bin->add_option("input", b_input, "Input image (PGM/PPM/PBM or PNG)")->required();
  bin->add_option("--method", b_method, "proposed, otsu, niblack or sauvola");
  bin->add_option("--out", b_out, "Output directory");
  add_fit_flags(bin, bf);

  // evaluate
  FitFlags ef;
  std::string e_manifest, e_out = ".", e_report = "csv";
  std::vector<std::string> e_methods{"proposed"};
  int e_jobs = 1;
  bool e_no_timing = false;
  auto* ev = app.add_subcommand("evaluate", "Score methods over a dataset manifest");
  ev->add_option("--manifest", e_manifest, "Manifest JSON")->required();
  ev->add_option("--methods", e_methods, "Methods to run")->delimiter(',');
  ev->add_option("--report", e_report, "Report format")->check(CLI::IsMember({"json", "csv"}));
  ev->add_option("--jobs", e_jobs, "Images processed concurrently")->check(CLI::PositiveNumber);
  ev->add_option("--out", e_out, "Output directory for reports and per-image artifacts");
  ev->add_flag("--no-timing", e_no_timing, "Leave wall-clock seconds out of reports");
  add_fit_flags(ev, ef);

  // synth
  std::string s_out;
  std::uint64_t s_seed = 1;
  auto* sy = app.add_subcommand("synth", "Write the synthetic evaluation suite");
  sy->add_option("--out", s_out, "Output directory")->required();
  sy->add_option("--seed", s_seed, "Seed");

  // pair
  std::string p_inputs, p_gt, p_manifest;
  auto* pa = app.add_subcommand("pair", "Write a manifest by matching file stems (review before use)");
  pa->add_option("--inputs", p_inputs, "Directory of input images")->required();
  pa->add_option("--gt", p_gt, "Directory of ground-truth masks")->required();
  pa->add_option("--manifest", p_manifest, "Manifest to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*bin) {
      const Method method = harness::parse_method(b_method);
      check_method_flags(bf, {method});
      if (!fs::exists(b_input)) {
        std::cerr << "rbin: no such file: " << b_input << "\n";
        return 2;
      }
      harness::RunConfig cfg = make_config(bf);
      cfg.method = method;
      cfg.out_dir = b_out;
      const harness::SingleRun run = harness::run_single(b_input, cfg);
      std::printf("%s: %zu foreground pixels (%.4f)", run.stem.c_str(), run.mask.count(), run.mask.fraction());
      if (run.tau) std::printf(", tau %.6g", *run.tau);
      std::printf(", %.3f s\n", run.seconds);
      return 0;
    }
    if (*ev) {
      std::vector<Method> methods;
      for (const auto& m : e_methods) methods.push_back(harness::parse_method(m));
      check_method_flags(ef, methods);
      harness::RunConfig cfg = make_config(ef);
      cfg.out_dir = e_out;
      cfg.report = e_report == "json" ? harness::ReportFormat::kJson : harness::ReportFormat::kCsv;
      cfg.record_timing = !e_no_timing;
      const harness::DatasetManifest manifest = harness::load_manifest(e_manifest);
      const harness::DatasetReport rep = harness::run_dataset(manifest, methods, cfg, e_jobs);
      for (const auto& path : harness::write_reports(rep, cfg)) std::printf("wrote %s\n", path.string().c_str());
      for (const auto& mr : rep.methods) {
        std::printf("%-9s mean FM %s  PSNR %s\n", std::string(harness::method_name(mr.method)).c_str(),
                    mr.mean.fm ? std::to_string(*mr.mean.fm).c_str() : "-",
                    mr.mean.psnr ? std::to_string(*mr.mean.psnr).c_str() : "-");
      }
      if (rep.failures > 0) log::warn(std::to_string(rep.failures) + " image(s) failed; see the error column");
      return 0;
    }
    if (*sy) {
      const auto m = harness::gen_synthetic_suite(s_out, s_seed);
      std::printf("wrote %zu scenes and %s\n", m.entries.size(), (fs::path(s_out) / "manifest.json").string().c_str());
      return 0;
    }
    if (*pa) {
      const auto m = harness::pair_directory(p_inputs, p_gt);
      harness::save_manifest(m, p_manifest);
      std::printf("paired %zu images into %s\n", m.entries.size(), p_manifest.c_str());
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "rbin: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "rbin: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
