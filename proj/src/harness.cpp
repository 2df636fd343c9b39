#include "rbin/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "rbin/log.hpp"
#include "rbin/synth.hpp"

namespace rbin::harness {

using nlohmann::json;

std::string_view method_name(Method m) noexcept {
  switch (m) {
    case Method::kProposed: return "proposed";
    case Method::kOtsu: return "otsu";
    case Method::kNiblack: return "niblack";
    case Method::kSauvola: return "sauvola";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::kProposed, Method::kOtsu, Method::kNiblack, Method::kSauvola}) {
    if (method_name(m) == name) return m;
  }
  throw InvalidArgument("unknown method '" + std::string(name) + "' (proposed, otsu, niblack, sauvola)");
}

namespace {

static_assert(std::endian::native == std::endian::little, "raw float64 output assumes a little-endian host");

void write_f64(const Matrix& m, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!out) throw IoError("short write to " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("short write to " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

json threshold_json(const ThresholdConfig& t) {
  return {{"exact_cap", t.exact_cap}, {"quantile_count", t.quantile_count}, {"include_empty_model", t.include_empty_model}};
}

json huber_json(const HuberConfig& h) {
  return {{"delta", h.delta},
          {"max_irls_iters", h.max_irls_iters},
          {"tol_inner", h.tol_inner},
          {"tol_stage", h.tol_stage},
          {"max_stages", h.max_stages},
          {"lambda_grid", h.lambda_grid},
          {"residual_scale", h.residual_scale == ResidualScale::kAbsolute ? "absolute" : "noise_standardized"},
          {"robust", h.robust},
          {"fit_raw_scale", h.fit_raw_scale}};
}

std::string fmt_num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + "\"";
}

}  // namespace

Matrix read_f64(const fs::path& path, std::size_t rows, std::size_t cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(LoadError::Reason::kUnreadable, "cannot open " + path.string());
  std::vector<double> v(rows * cols);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(v.size() * sizeof(double)) || in.peek() != EOF) {
    throw LoadError(LoadError::Reason::kCorrupt, path.string() + ": size does not match " + std::to_string(rows) + "x" +
                                                     std::to_string(cols));
  }
  return Matrix(rows, cols, std::move(v));
}

SingleRun process_image(const GrayImage& loaded, const std::string& stem, const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const GrayImage img = cfg.polarity == Polarity::kLightForeground ? invert(loaded) : loaded;

  SingleRun run;
  run.stem = stem;
  json& sc = run.sidecar;
  sc["schema"] = kSchemaVersion;
  sc["method"] = method_name(cfg.method);
  sc["rows"] = img.rows();
  sc["cols"] = img.cols();
  sc["polarity"] = cfg.polarity == Polarity::kLightForeground ? "light_foreground" : "dark_foreground";

  std::optional<BinarizationResult> res;
  switch (cfg.method) {
    case Method::kProposed: {
      res = binarize(img, cfg.proposed);
      run.mask = res->mask;
      run.tau = res->tau;
      run.stages = res->model.stage_count();
      sc["fit_scale"] = res->fit_scale == Scale::kUnit ? "unit" : "raw";
      sc["selector"] = cfg.proposed.selector == ThresholdSelector::kOtsu ? "otsu" : "gmdl";
      sc["threshold"] = threshold_json(cfg.proposed.threshold);
      sc["huber"] = huber_json(cfg.proposed.huber);
      json stages = json::array();
      for (const Stage& st : res->model.stages()) {
        json trials = json::array();
        for (const LambdaTrial& t : st.trials) {
          json tj = {{"lambda", t.lambda}, {"objective", t.objective}, {"irls_iters", t.irls_iters}};
          if (t.failed) tj["error"] = t.error;
          trials.push_back(std::move(tj));
        }
        stages.push_back({{"lambda", st.term.lambda_used},
                          {"energy", st.term.energy()},
                          {"irls_iters", st.term.irls_iters},
                          {"converged", st.term.converged},
                          {"objective", st.term.objective},
                          {"cutoff", st.term.cutoff},
                          {"trials", std::move(trials)}});
      }
      sc["stages"] = std::move(stages);
      break;
    }
    case Method::kOtsu: {
      OtsuResult o = otsu(img);
      run.mask = std::move(o.mask);
      run.tau = o.tau;
      sc["fit_scale"] = img.scale() == Scale::kUnit ? "unit" : "raw";
      sc["degenerate"] = o.degenerate;
      break;
    }
    case Method::kNiblack:
      run.mask = niblack(img, cfg.window, cfg.niblack_k);
      sc["window"] = cfg.window;
      sc["k"] = cfg.niblack_k;
      break;
    case Method::kSauvola:
      run.mask = sauvola(img, cfg.window);
      sc["window"] = cfg.window;
      break;
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (run.tau) sc["tau"] = *run.tau;
  sc["foreground_pixels"] = run.mask.count();
  if (cfg.record_timing) sc["seconds"] = run.seconds;

  if (cfg.write_artifacts) {
    ensure_dir(cfg.out_dir);
    json art;
    const fs::path mask_path = cfg.out_dir / (stem + "_mask.pbm");
    save_pbm(run.mask, mask_path);
    art["mask"] = mask_path.filename().string();
    if (res) {
      const fs::path bg = cfg.out_dir / (stem + "_background.pgm");
      const fs::path sub = cfg.out_dir / (stem + "_subtracted.pgm");
      const fs::path raw = cfg.out_dir / (stem + "_subtracted.f64");
      save_pgm(rescale_for_view(res->background), bg);
      save_pgm(rescale_for_view(res->subtracted.values), sub);
      write_f64(res->subtracted.values, raw);
      art["background_view"] = bg.filename().string();
      art["subtracted_view"] = sub.filename().string();
      art["subtracted_f64"] = raw.filename().string();
    }
    sc["artifacts"] = std::move(art);
    write_text(cfg.out_dir / (stem + ".json"), sc.dump(2) + "\n");
  }
  return run;
}

SingleRun run_single(const fs::path& input, const RunConfig& cfg) {
  const GrayImage img = load_image(input);
  return process_image(img, input.stem().string(), cfg);
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(LoadError::Reason::kUnreadable, "cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw LoadError(LoadError::Reason::kCorrupt, path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("entries") || !j["entries"].is_object()) {
    throw LoadError(LoadError::Reason::kCorrupt, path.string() + ": expected an object with an \"entries\" map");
  }
  if (j.contains("schema") && j["schema"] != kSchemaVersion) {
    throw LoadError(LoadError::Reason::kUnsupportedFormat, path.string() + ": unsupported manifest schema");
  }
  DatasetManifest m;
  m.root = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  for (const auto& [id, e] : j["entries"].items()) {
    if (!e.is_object() || !e.contains("input") || !e.contains("ground_truth")) {
      throw LoadError(LoadError::Reason::kCorrupt, path.string() + ": entry '" + id + "' needs input and ground_truth");
    }
    ManifestEntry entry{id, e["input"].get<std::string>(), e["ground_truth"].get<std::string>(), std::nullopt};
    if (e.contains("background")) entry.background = fs::path(e["background"].get<std::string>());
    for (const fs::path& p : {entry.input, entry.ground_truth}) {
      if (!fs::exists(m.resolve(p))) throw IoError(path.string() + ": entry '" + id + "' file missing: " + m.resolve(p).string());
    }
    m.entries.push_back(std::move(entry));
  }
  // nlohmann objects iterate in key order already; keep the guarantee explicit
  std::sort(m.entries.begin(), m.entries.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return m;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  json entries = json::object();
  std::set<std::string> seen;
  for (const auto& e : manifest.entries) {
    if (!seen.insert(e.id).second) throw InvalidArgument("save_manifest: duplicate id " + e.id);
    json je = {{"input", e.input.generic_string()}, {"ground_truth", e.ground_truth.generic_string()}};
    if (e.background) je["background"] = e.background->generic_string();
    entries[e.id] = std::move(je);
  }
  write_text(path, json{{"schema", kSchemaVersion}, {"entries", std::move(entries)}}.dump(2) + "\n");
}

DatasetManifest pair_directory(const fs::path& inputs, const fs::path& truths) {
  if (!fs::is_directory(inputs) || !fs::is_directory(truths)) {
    throw IoError("pair: both arguments must be directories");
  }
  auto image_files = [](const fs::path& dir) {
    static const std::set<std::string> exts{".pgm", ".pbm", ".ppm", ".pnm", ".png", ".bmp", ".tif", ".tiff"};
    std::map<std::string, fs::path> out;
    for (const auto& de : fs::directory_iterator(dir)) {
      if (!de.is_regular_file()) continue;
      std::string ext = de.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      if (exts.count(ext)) out[de.path().stem().string()] = de.path();
    }
    return out;
  };
  const auto in = image_files(inputs);
  auto gt = image_files(truths);
  std::map<std::string, fs::path> gt_by_stem;
  for (const auto& [stem, p] : gt) {
    std::string s = stem;
    for (const char* suf : {"_gt", "_GT", "-gt", "-GT", "_estGT"}) {
      const std::string sfx(suf);
      if (s.size() > sfx.size() && s.compare(s.size() - sfx.size(), sfx.size(), sfx) == 0) {
        s.resize(s.size() - sfx.size());
        break;
      }
    }
    gt_by_stem.emplace(s, p);
  }
  DatasetManifest m;
  m.root = ".";
  const bool same_dir = fs::equivalent(inputs, truths);
  for (const auto& [stem, p] : in) {
    if (same_dir && gt_by_stem.count(stem) && gt_by_stem[stem] == p) continue;  // the mask itself
    auto it = gt_by_stem.find(stem);
    if (it == gt_by_stem.end() || it->second == p) {
      log::warn("pair: no ground truth for " + p.string());
      continue;
    }
    m.entries.push_back({stem, fs::absolute(p), fs::absolute(it->second), std::nullopt});
  }
  return m;
}

namespace {

ReportRow metrics_row(const std::string& id, const SingleRun& run, const BinaryImage& gt) {
  if (!run.mask.same_shape(gt)) throw DimensionError("prediction and ground truth differ in size");
  const MetricsReport r = evaluate(run.mask, gt);
  ReportRow row;
  row.id = id;
  row.fm = r.fm;
  row.pfm = r.pfm;
  row.psnr = r.psnr;
  row.drd = r.drd;
  row.mpm = r.mpm;
  row.tau = run.tau;
  row.stages = run.stages;
  row.seconds = run.seconds;
  return row;
}

ReportRow mean_row(const std::vector<ReportRow>& rows) {
  ReportRow mean;
  mean.id = "mean";
  auto avg = [&](std::optional<double> ReportRow::*field) -> std::optional<double> {
    double s = 0;
    std::size_t n = 0;
    for (const auto& r : rows) {
      if (r.error.empty() && (r.*field)) {
        s += *(r.*field);
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return s / static_cast<double>(n);
  };
  mean.fm = avg(&ReportRow::fm);
  mean.pfm = avg(&ReportRow::pfm);
  mean.psnr = avg(&ReportRow::psnr);
  mean.drd = avg(&ReportRow::drd);
  mean.mpm = avg(&ReportRow::mpm);
  double secs = 0, stages = 0;
  std::size_t ok = 0;
  for (const auto& r : rows) {
    if (!r.error.empty()) continue;
    secs += r.seconds;
    stages += static_cast<double>(r.stages);
    ++ok;
  }
  mean.seconds = ok ? secs / static_cast<double>(ok) : 0.0;
  mean.stages = ok ? static_cast<std::size_t>(std::lround(stages / static_cast<double>(ok))) : 0;
  return mean;
}

}  // namespace

DatasetReport run_dataset(const DatasetManifest& manifest, const std::vector<Method>& methods, const RunConfig& cfg,
                          int jobs) {
  if (methods.empty()) throw InvalidArgument("run_dataset: no methods");
  if (jobs < 1) throw InvalidArgument("run_dataset: jobs must be >= 1");
  const std::size_t n = manifest.entries.size();
  DatasetReport out;
  for (Method method : methods) {
    RunConfig mcfg = cfg;
    mcfg.method = method;
    mcfg.out_dir = cfg.out_dir / std::string(method_name(method));
    if (jobs > 1) {
      // Image-level parallelism replaces the inner parallel loops.
      mcfg.proposed.huber.backend = kernels::Backend::kSerial;
      mcfg.proposed.huber.parallel_lambda = false;
    }
    std::vector<ReportRow> rows(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k = next++; k < n; k = next++) {
        const ManifestEntry& e = manifest.entries[k];
        try {
          const GrayImage img = load_image(manifest.resolve(e.input));
          const BinaryImage gt = load_mask(manifest.resolve(e.ground_truth));
          const SingleRun run = process_image(img, e.id, mcfg);
          rows[k] = metrics_row(e.id, run, gt);
        } catch (const std::exception& ex) {
          rows[k] = ReportRow{};
          rows[k].id = e.id;
          rows[k].error = ex.what();
          log::warn(std::string(method_name(method)) + " " + e.id + ": " + ex.what());
        }
      }
    };
    const int threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), std::max<std::size_t>(n, 1)));
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    MethodReport mr;
    mr.method = method;
    mr.rows = std::move(rows);
    for (const auto& r : mr.rows) out.failures += r.error.empty() ? 0 : 1;
    mr.mean = mean_row(mr.rows);
    out.methods.push_back(std::move(mr));
  }
  return out;
}

std::string to_csv(const MethodReport& report, bool timing) {
  std::ostringstream os;
  os << "# schema: " << kSchemaVersion << ", method: " << method_name(report.method) << "\n";
  os << "id,FM,pFM,PSNR,DRD,MPM,tau,stages,seconds,error\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt_num(*v) : std::string(); };
  auto line = [&](const ReportRow& r, bool is_mean) {
    os << csv_field(r.id) << ',';
    if (r.error.empty()) {
      os << opt(r.fm) << ',' << opt(r.pfm) << ',' << opt(r.psnr) << ',' << opt(r.drd) << ',' << opt(r.mpm) << ','
         << (is_mean ? std::string() : opt(r.tau)) << ',' << r.stages << ','
         << (timing ? fmt_num(r.seconds) : std::string()) << ",\n";
    } else {
      os << ",,,,,,,," << csv_field(r.error) << "\n";
    }
  };
  for (const auto& r : report.rows) line(r, false);
  line(report.mean, true);
  return os.str();
}

json to_json(const MethodReport& report, bool timing) {
  auto row_json = [&](const ReportRow& r) {
    json j = {{"id", r.id}};
    if (!r.error.empty()) {
      j["error"] = r.error;
      return j;
    }
    auto put = [&](const char* key, const std::optional<double>& v) { j[key] = v ? json(*v) : json(nullptr); };
    put("FM", r.fm);
    put("pFM", r.pfm);
    put("PSNR", r.psnr);
    put("DRD", r.drd);
    put("MPM", r.mpm);
    if (r.tau) j["tau"] = *r.tau;
    j["stages"] = r.stages;
    if (timing) j["seconds"] = r.seconds;
    return j;
  };
  json rows = json::array();
  for (const auto& r : report.rows) rows.push_back(row_json(r));
  json mean = row_json(report.mean);
  mean.erase("id");
  return {{"schema", kSchemaVersion}, {"method", method_name(report.method)}, {"rows", std::move(rows)}, {"mean", std::move(mean)}};
}

std::vector<fs::path> write_reports(const DatasetReport& report, const RunConfig& cfg) {
  ensure_dir(cfg.out_dir);
  std::vector<fs::path> paths;
  for (const auto& mr : report.methods) {
    const std::string base = "report_" + std::string(method_name(mr.method));
    if (cfg.report == ReportFormat::kCsv) {
      paths.push_back(cfg.out_dir / (base + ".csv"));
      write_text(paths.back(), to_csv(mr, cfg.record_timing));
    } else {
      paths.push_back(cfg.out_dir / (base + ".json"));
      write_text(paths.back(), to_json(mr, cfg.record_timing).dump(2) + "\n");
    }
  }
  return paths;
}

DatasetManifest gen_synthetic_suite(const fs::path& out_dir, std::uint64_t seed) {
  ensure_dir(out_dir);
  DatasetManifest m;
  m.root = out_dir;
  for (const SuiteScene& s : synthetic_suite(seed)) {
    ManifestEntry e{s.id, s.id + ".pgm", s.id + "_gt.pbm", fs::path(s.id + "_bg.pgm")};
    save_pgm(s.scene.image, out_dir / e.input, 65535);
    save_pbm(s.scene.mask, out_dir / e.ground_truth);
    save_pgm(s.scene.background, out_dir / *e.background, 65535);
    m.entries.push_back(std::move(e));
  }
  save_manifest(m, out_dir / "manifest.json");
  return m;
}

}  // namespace rbin::harness
