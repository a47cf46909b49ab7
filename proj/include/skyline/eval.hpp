#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "skyline/dp.hpp"

namespace skyline {

/// One ground-truth skyline row per image column.
struct GroundTruth {
  std::vector<int> rows;
};

/// Throws MalformedGroundTruth when the length differs from `width` or a row
/// falls outside [0, height).
void validate_ground_truth(const GroundTruth& gt, int width, int height, const std::string& name = "ground truth");

/// (1/N) sum_j |pred(j) - gt(j)|. Throws LengthMismatch.
double average_absolute_error(std::span<const int> pred, std::span<const int> gt);
double average_absolute_error(const SkylinePath& pred, const GroundTruth& gt);

/// Fraction of the height x N pixels whose sky / non-sky label agrees; rows
/// above the skyline are sky, the skyline row itself is not.
/// Throws LengthMismatch, InvalidParameter for rows outside [0, height).
double segmentation_accuracy(std::span<const int> pred, std::span<const int> gt, int height);
double segmentation_accuracy(const SkylinePath& pred, const GroundTruth& gt, int height);

struct Histogram {
  double bin_width = 0.5;
  double overflow_at = 10.0;  // last bin collects [overflow_at, inf)
  std::vector<double> fractions;

  double lower_edge(std::size_t bin) const noexcept { return static_cast<double>(bin) * bin_width; }
};

Histogram error_histogram(std::span<const double> errors, double bin_width = 0.5, double overflow_at = 10.0);

struct ImageError {
  std::string name;
  double error = 0.0;
  std::optional<double> accuracy;
};

struct EvalReport {
  std::vector<ImageError> per_image;
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
  std::optional<double> mean_accuracy;
  Histogram histogram;
};

/// mean, population std, min, max and normalized histogram. Throws EmptyInput.
EvalReport aggregate(std::span<const double> errors, double bin_width = 0.5, double overflow_at = 10.0);
EvalReport aggregate(std::vector<ImageError> per_image, double bin_width = 0.5, double overflow_at = 10.0);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
std::string report_table(const EvalReport& report, const std::string& title = "A_err (px)");

// Ground-truth files: a single line of comma-separated integer rows.
GroundTruth read_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, std::span<const int> rows);

struct DatasetEntry {
  std::string stem;
  std::filesystem::path image_path;
  std::filesystem::path gt_path;
  GroundTruth gt;
  int width = 0;
  int height = 0;
};

struct Dataset {
  std::vector<DatasetEntry> entries;  // sorted by stem
  std::vector<std::string> skipped;   // images without a ground-truth file
};

/// Pairs every image in `root` with `<stem>.csv`. Images are opened once to
/// validate the ground truth against their dimensions and are not retained.
/// Throws MissingDirectory, MalformedGroundTruth (naming the file).
Dataset load_dataset(const std::filesystem::path& root);

struct SynthParams {
  int count = 10;
  int width = 256;
  int height = 256;
  std::uint64_t seed = 7;
};

struct SynthSummary {
  std::vector<std::filesystem::path> images;
  std::vector<std::filesystem::path> ground_truths;
};

/// Deterministic synthetic mountain scenes: piecewise-linear skyline over a
/// bright noisy sky, textured terrain with distractor ridges below the
/// skyline. Writes `synth_NNNN.png` and `synth_NNNN.csv` into `out_dir`.
/// Throws InvalidParameter for dimensions below 32 or a negative count.
SynthSummary synth_generate(const SynthParams& params, const std::filesystem::path& out_dir);

/// The in-memory scene behind one synthetic image.
struct SynthScene {
  RgbImage image;
  GroundTruth gt;
};
SynthScene synth_scene(int width, int height, std::uint64_t seed);

}  // namespace skyline
