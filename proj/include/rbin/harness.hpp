#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rbin/metrics.hpp"
#include "rbin/threshold.hpp"

namespace rbin::harness {

namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

enum class Method { kProposed, kOtsu, kNiblack, kSauvola };
std::string_view method_name(Method m) noexcept;
Method parse_method(std::string_view name);

enum class Polarity { kDarkForeground, kLightForeground };
enum class ReportFormat { kJson, kCsv };

struct RunConfig {
  Method method = Method::kProposed;
  BinarizeOptions proposed;
  int window = 25;          // niblack, sauvola
  double niblack_k = -0.2;  // niblack
  Polarity polarity = Polarity::kDarkForeground;
  fs::path out_dir = ".";
  ReportFormat report = ReportFormat::kCsv;
  std::uint64_t seed = 1;
  /// Wall-clock seconds in reports; off gives byte-reproducible reports.
  bool record_timing = true;
  /// Per-image artifacts (mask, views, raw subtracted values, sidecar).
  bool write_artifacts = true;
};

struct SingleRun {
  std::string stem;
  BinaryImage mask;
  std::optional<double> tau;  // global methods only
  std::size_t stages = 0;
  double seconds = 0;
  nlohmann::json sidecar;
};

/// Binarizes one already-loaded image; writes artifacts under cfg.out_dir
/// named after `stem` when cfg.write_artifacts is set.
SingleRun process_image(const GrayImage& img, const std::string& stem, const RunConfig& cfg);
/// Loads `input` and calls process_image with the file stem.
SingleRun run_single(const fs::path& input, const RunConfig& cfg);

/// Reads Y~ back from a `<stem>_subtracted.f64` file (row-major float64,
/// little-endian, no header; dimensions come from the sidecar).
Matrix read_f64(const fs::path& path, std::size_t rows, std::size_t cols);

struct ManifestEntry {
  std::string id;
  fs::path input;         // absolute, or relative to root
  fs::path ground_truth;
  std::optional<fs::path> background;  // synthetic suites only
};

struct DatasetManifest {
  fs::path root;
  std::vector<ManifestEntry> entries;  // sorted by id

  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : root / p; }
};

/// {"schema": 1, "entries": {"<id>": {"input": ..., "ground_truth": ...}}};
/// paths relative to the manifest's directory. Every file must exist.
DatasetManifest load_manifest(const fs::path& path);
void save_manifest(const DatasetManifest& manifest, const fs::path& path);

/// Pairs images in `inputs` with masks in `truths` that share a stem, with an
/// optional _gt / _GT / -gt suffix on the mask. Unpaired files are skipped
/// with a warning.
DatasetManifest pair_directory(const fs::path& inputs, const fs::path& truths);

struct ReportRow {
  std::string id;
  std::optional<double> fm, pfm, psnr, drd, mpm;
  std::optional<double> tau;
  std::size_t stages = 0;
  double seconds = 0;
  std::string error;  // non-empty marks a failed image
};

struct MethodReport {
  Method method = Method::kProposed;
  std::vector<ReportRow> rows;  // ordered by id
  ReportRow mean;               // per-metric mean over rows where it is defined
};

struct DatasetReport {
  std::vector<MethodReport> methods;
  std::size_t failures = 0;
};

/// Runs every method on every entry, `jobs` images at a time. A failing
/// image becomes an error row; the batch continues.
DatasetReport run_dataset(const DatasetManifest& manifest, const std::vector<Method>& methods, const RunConfig& cfg,
                          int jobs = 1);

std::string to_csv(const MethodReport& report, bool timing);
nlohmann::json to_json(const MethodReport& report, bool timing);
/// report_<method>.csv or .json under cfg.out_dir; returns the paths.
std::vector<fs::path> write_reports(const DatasetReport& report, const RunConfig& cfg);

/// Writes the ten synthetic scenes (16-bit PGM inputs, PBM masks, 16-bit PGM
/// backgrounds) plus manifest.json into `out_dir`.
DatasetManifest gen_synthetic_suite(const fs::path& out_dir, std::uint64_t seed);

}  // namespace rbin::harness
