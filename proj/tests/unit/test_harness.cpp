#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "rbin/harness.hpp"
#include "rbin/synth.hpp"
#include "scratch.hpp"

using namespace rbin;
using namespace rbin::harness;
namespace fs = std::filesystem;

namespace {

// Three small scenes written to disk with a manifest.
DatasetManifest small_dataset(const fs::path& dir) {
  DatasetManifest m;
  m.root = dir;
  for (int k = 0; k < 3; ++k) {
    SceneSpec sp;
    sp.rows = sp.cols = 48;
    sp.background = {product_term({1.0}, {0.5, 0.3})};
    sp.noise_sigma = 0.02;
    sp.seed = std::uint64_t(10 + k);
    sp.blobs = {Blob{16.0 + k, 20, 5, 7, 0, 0.3}, Blob{34, 30.0 - k, 4, 4, 0, 0.3}};
    const Scene s = synth_image(sp);
    const std::string id = "img" + std::to_string(k);
    save_pgm(s.image, dir / (id + ".pgm"), 65535);
    save_pbm(s.mask, dir / (id + "_gt.pbm"));
    m.entries.push_back(ManifestEntry{id, id + ".pgm", id + "_gt.pbm", std::nullopt});
  }
  save_manifest(m, dir / "manifest.json");
  return m;
}

RunConfig quiet(const fs::path& out) {
  RunConfig cfg;
  cfg.out_dir = out;
  cfg.record_timing = false;
  return cfg;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(RBIN_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

}  // namespace

TEST(Manifest, RoundTrip) {
  ScratchDir d("manifest_rt");
  const DatasetManifest m = small_dataset(d.path());
  const DatasetManifest back = load_manifest(d / "manifest.json");
  ASSERT_EQ(back.entries.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back.entries[k].id, m.entries[k].id);
    EXPECT_EQ(back.entries[k].input, m.entries[k].input);
    EXPECT_EQ(back.entries[k].ground_truth, m.entries[k].ground_truth);
    EXPECT_TRUE(fs::exists(back.resolve(back.entries[k].input)));
  }
  DatasetManifest dup = m;
  dup.entries.push_back(m.entries[0]);
  EXPECT_THROW(save_manifest(dup, d / "dup.json"), InvalidArgument);
}

TEST(Manifest, MissingFileIsAnIoError) {
  ScratchDir d("manifest_missing");
  small_dataset(d.path());
  fs::remove(d / "img1_gt.pbm");
  EXPECT_THROW(load_manifest(d / "manifest.json"), IoError);
  spit(d / "bad.json", "{\"entries\": [1, 2]}");
  EXPECT_THROW(load_manifest(d / "bad.json"), LoadError);
}

TEST(Manifest, PairByStem) {
  ScratchDir d("pair");
  fs::create_directories(d / "in");
  fs::create_directories(d / "gt");
  const GrayImage g(Matrix(4, 4, 0.5), Scale::kUnit);
  save_pgm(g, d / "in" / "a.pgm");
  save_pgm(g, d / "in" / "b.pgm");
  save_pgm(g, d / "in" / "lonely.pgm");
  save_pbm(BinaryImage(4, 4), d / "gt" / "a_gt.pbm");
  save_pbm(BinaryImage(4, 4), d / "gt" / "b_estGT.pbm");
  const DatasetManifest m = pair_directory(d / "in", d / "gt");
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.entries[0].id, "a");
  EXPECT_EQ(m.entries[1].ground_truth.filename(), "b_estGT.pbm");
}

TEST(RunDataset, RowsAndArithmeticMean) {
  ScratchDir d("dataset_mean");
  const DatasetManifest m = small_dataset(d.path());
  const DatasetReport rep = run_dataset(m, {Method::kProposed, Method::kOtsu}, quiet(d / "out"));
  ASSERT_EQ(rep.methods.size(), 2u);
  EXPECT_EQ(rep.failures, 0u);
  for (const MethodReport& mr : rep.methods) {
    ASSERT_EQ(mr.rows.size(), 3u);
    double sum = 0;
    for (const ReportRow& r : mr.rows) {
      ASSERT_TRUE(r.fm);
      sum += *r.fm;
    }
    EXPECT_NEAR(*mr.mean.fm, sum / 3, 1e-15);
    const std::string csv = to_csv(mr, false);
    // comment, header, three rows, mean
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
    EXPECT_EQ(csv.rfind("# schema: 1", 0), 0u);
  }
  EXPECT_GT(*rep.methods[0].mean.fm, 0.9);
}

TEST(RunDataset, CorruptInputBecomesErrorRow) {
  ScratchDir d("dataset_corrupt");
  const DatasetManifest m = small_dataset(d.path());
  spit(d / "img1.pgm", "P5\n48 48\n255\nshort");
  const DatasetReport rep = run_dataset(load_manifest(d / "manifest.json"), {Method::kProposed}, quiet(d / "out"));
  EXPECT_EQ(rep.failures, 1u);
  const MethodReport& mr = rep.methods[0];
  ASSERT_EQ(mr.rows.size(), 3u);
  EXPECT_TRUE(mr.rows[0].error.empty());
  EXPECT_FALSE(mr.rows[1].error.empty());
  EXPECT_FALSE(mr.rows[1].fm);
  EXPECT_TRUE(mr.rows[2].error.empty());
  EXPECT_NEAR(*mr.mean.fm, (*mr.rows[0].fm + *mr.rows[2].fm) / 2, 1e-15);
}

TEST(RunDataset, ReportsAreByteIdenticalWithoutTiming) {
  ScratchDir d("dataset_bytes");
  const DatasetManifest m = small_dataset(d.path());
  RunConfig a = quiet(d / "a"), b = quiet(d / "b");
  b.report = a.report = ReportFormat::kCsv;
  write_reports(run_dataset(m, {Method::kProposed, Method::kNiblack}, a), a);
  write_reports(run_dataset(m, {Method::kProposed, Method::kNiblack}, b, 2), b);
  for (const char* f : {"report_proposed.csv", "report_niblack.csv"}) {
    ASSERT_TRUE(fs::exists(d / "a" / f));
    EXPECT_EQ(slurp(d / "a" / f), slurp(d / "b" / f)) << f;
  }
  a.report = ReportFormat::kJson;
  const auto paths = write_reports(run_dataset(m, {Method::kOtsu}, a), a);
  ASSERT_EQ(paths.size(), 1u);
  const auto j = nlohmann::json::parse(slurp(paths[0]));
  EXPECT_EQ(j["schema"], 1);
}

TEST(Artifacts, SidecarTauMatchesRecomputation) {
  ScratchDir d("sidecar");
  small_dataset(d.path());
  RunConfig cfg = quiet(d / "out");
  const SingleRun run = run_single(d / "img0.pgm", cfg);
  const auto sc = nlohmann::json::parse(slurp(d / "out" / "img0.json"));
  EXPECT_EQ(sc["schema"], 1);
  EXPECT_EQ(sc["method"], "proposed");
  EXPECT_FALSE(sc.contains("seconds"));
  ASSERT_EQ(sc["stages"].size(), run.stages);
  const Matrix y = read_f64(d / "out" / sc["artifacts"]["subtracted_f64"].get<std::string>(), sc["rows"], sc["cols"]);
  const ThresholdSelection sel = select_threshold(SubtractedImage{y}, cfg.proposed.threshold);
  EXPECT_EQ(sel.tau, sc["tau"].get<double>());
  EXPECT_EQ(apply_threshold(y, sel.tau), load_mask(d / "out" / "img0_mask.pbm"));
  EXPECT_THROW(read_f64(d / "out" / "img0_subtracted.f64", 47, 48), LoadError);

  cfg.method = Method::kOtsu;
  run_single(d / "img1.pgm", cfg);
  const auto so = nlohmann::json::parse(slurp(d / "out" / "img1.json"));
  EXPECT_FALSE(so.contains("stages"));
  EXPECT_TRUE(so.contains("tau"));
  cfg.method = Method::kSauvola;
  run_single(d / "img2.pgm", cfg);
  EXPECT_FALSE(nlohmann::json::parse(slurp(d / "out" / "img2.json")).contains("tau"));
}

TEST(Artifacts, LightForegroundIsInverted) {
  ScratchDir d("polarity");
  SceneSpec sp;
  sp.rows = sp.cols = 40;
  sp.background = {constant_term(0.8)};
  sp.blobs = {Blob{20, 20, 6, 6, 0, 0.4}};
  const Scene s = synth_image(sp);
  RunConfig cfg = quiet(d.path());
  cfg.write_artifacts = false;
  const BinaryImage dark = process_image(s.image, "x", cfg).mask;
  cfg.polarity = Polarity::kLightForeground;
  const BinaryImage light = process_image(invert(s.image), "x", cfg).mask;
  EXPECT_EQ(dark, light);
  EXPECT_TRUE(fs::is_empty(d.path()));
}

TEST(Synth, SuiteIsByteIdenticalAcrossRuns) {
  ScratchDir d("suite_twice");
  const DatasetManifest a = gen_synthetic_suite(d / "a", 7);
  gen_synthetic_suite(d / "b", 7);
  ASSERT_EQ(a.entries.size(), 10u);
  for (const auto& de : fs::directory_iterator(d / "a")) {
    EXPECT_EQ(slurp(de.path()), slurp(d / "b" / de.path().filename())) << de.path();
  }
  gen_synthetic_suite(d / "c", 8);
  EXPECT_NE(slurp(d / "a" / "s01_flat.pgm"), slurp(d / "c" / "s01_flat.pgm"));
  EXPECT_EQ(load_manifest(d / "a" / "manifest.json").entries.size(), 10u);
}

TEST(Method, NamesRoundTrip) {
  for (Method m : {Method::kProposed, Method::kOtsu, Method::kNiblack, Method::kSauvola})
    EXPECT_EQ(parse_method(method_name(m)), m);
  EXPECT_THROW(parse_method("bernsen"), InvalidArgument);
}

TEST(Cli, ExitCodes) {
  ScratchDir d("cli");
  small_dataset(d.path());
  const fs::path log = d / "log.txt";
  EXPECT_EQ(run_cli("binarize " + (d / "nope.pgm").string() + " --out " + (d / "o").string(), log), 2);
  EXPECT_NE(slurp(log).find("nope.pgm"), std::string::npos);
  EXPECT_EQ(run_cli("binarize", log), 2);
  EXPECT_EQ(run_cli("frobnicate", log), 2);
  EXPECT_EQ(run_cli("binarize " + (d / "img0.pgm").string() + " --method otsu --delta 2", log), 2);
  spit(d / "junk.pgm", "P5\n10 10\n255\nxx");
  EXPECT_EQ(run_cli("binarize " + (d / "junk.pgm").string() + " --out " + (d / "o").string(), log), 3);
  EXPECT_EQ(run_cli("binarize " + (d / "img0.pgm").string() + " --out " + (d / "o").string(), log), 0);
  EXPECT_TRUE(fs::exists(d / "o" / "img0_mask.pbm"));
}

TEST(Cli, WritesOnlyInsideOutDir) {
  ScratchDir d("cli_out");
  small_dataset(d.path());
  std::set<fs::path> before;
  for (const auto& de : fs::recursive_directory_iterator(d.path())) before.insert(de.path());
  const fs::path log = d.path().parent_path() / ("rbin_cli_out_log_" + std::to_string(::getpid()));
  ASSERT_EQ(run_cli("evaluate --manifest " + (d / "manifest.json").string() + " --methods proposed,otsu --no-timing --out " +
                        (d / "res").string(),
                    log),
            0);
  fs::remove(log);
  for (const auto& de : fs::recursive_directory_iterator(d.path())) {
    if (before.count(de.path())) continue;
    const auto rel = fs::relative(de.path(), d / "res");
    EXPECT_FALSE(rel.empty() || *rel.begin() == "..") << de.path();
  }
  EXPECT_TRUE(fs::exists(d / "res" / "report_proposed.csv"));
  EXPECT_TRUE(fs::exists(d / "res" / "otsu" / "img0_mask.pbm"));
}
