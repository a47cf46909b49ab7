#pragma once

// End-to-end drivers behind the command-line tool: configuration, training,
// detection, the two baselines and directory evaluation.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skyline/blade.hpp"
#include "skyline/dp.hpp"
#include "skyline/edges.hpp"
#include "skyline/eval.hpp"
#include "skyline/tensor.hpp"

namespace skyline {

struct BladeConfig {
  int side = 7;
  double lambda_smooth = 1e-2;  // per bucket sample
  double lambda_ridge = 1e-4;   // per bucket sample
  std::optional<std::size_t> min_samples;  // default 2 * side^2
  double positive_target = 1.0;
  double negative_target = 0.0;
  int exclusion_margin = 10;
  ScoreNormalization normalization = ScoreNormalization::Clamp;

  std::size_t resolved_min_samples() const noexcept {
    return min_samples.value_or(2 * static_cast<std::size_t>(side) * static_cast<std::size_t>(side));
  }
};

struct DpConfig {
  int delta = 4;
  int tog = 5;
  std::optional<double> link_weight;  // default 1 / rows
  double dummy_cost = 2.0;
  double v = 0.5;
  double w1 = 0.5;
  double l = 0.1;
  bool gap_fill = true;

  DpParams params_for(int rows) const;
};

struct PipelineConfig {
  CannyParams canny;
  TensorParams tensor;
  QuantizerConfig quantizer;
  BladeConfig blade;
  DpConfig dp;
  std::uint64_t seed = 0;
  int workers = 1;

  /// Throws BadConfig when a field lies outside its module's range.
  void validate() const;
};

/// Keys accepted in config files and by `set_config_value`.
const std::vector<std::string>& config_keys();

/// Applies one `key = value` assignment. Throws BadConfig on unknown keys or
/// unparsable values.
void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value);

/// Parses `key = value` lines ('#' starts a comment) on top of `base`.
PipelineConfig parse_config(const std::string& text, PipelineConfig base = {});
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
std::string config_to_text(const PipelineConfig& config);

struct StageTimings {
  double edges_ms = 0.0;
  double tensor_ms = 0.0;
  double predict_ms = 0.0;
  double dp_ms = 0.0;
  double total_ms = 0.0;  // wall clock over all stages

  double stage_sum() const noexcept { return edges_ms + tensor_ms + predict_ms + dp_ms; }
};

struct DetectionResult {
  SkylinePath path;
  double total_cost = 0.0;
  std::vector<double> column_costs;  // nodal cost of the path node in each column
  StageTimings timing;
};

struct TrainSummary {
  std::size_t images = 0;
  std::size_t samples = 0;
  std::size_t trained_buckets = 0;
  std::size_t untrained_buckets = 0;
  std::vector<std::size_t> bucket_counts;
  std::vector<std::string> warnings;
};

struct TrainResult {
  FilterBank bank;
  TrainSummary summary;
};

/// Quantizer whose edges are rounded to float32, as stored in a bank file, so
/// training and inference bucket pixels identically.
QuantizerConfig storage_quantizer(const QuantizerConfig& q);

/// Collect samples from every entry, accumulate in fixed shards of images
/// (merged in order, so the result does not depend on the worker count), and
/// solve the bank. Throws NoTrainingPairs on an empty dataset.
TrainResult train_bank(const Dataset& dataset, const PipelineConfig& config);

/// Edges -> tensor features -> prediction -> fused cost -> gap fill -> DP.
DetectionResult detect(const FilterBank& bank, const RgbImage& img, const PipelineConfig& config);

enum class BaselineMethod { EdgesOnly, Gradient };
/// Throws UnknownMethod for anything other than "edges" or "gradient".
BaselineMethod parse_baseline_method(const std::string& name);
DetectionResult run_baseline(BaselineMethod method, const RgbImage& img, const PipelineConfig& config);

/// Path rows drawn as pure red pixels over the image.
RgbImage render_overlay(const RgbImage& img, const SkylinePath& path);

/// Matches `<stem>.csv` files between the two directories and aggregates
/// A_err; segmentation accuracy is added when the ground-truth directory holds
/// the image (for its height). Throws MissingDirectory, NoMatchedPairs.
EvalReport evaluate_dirs(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir);

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace skyline
