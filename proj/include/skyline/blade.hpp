#pragma once

// Structure-tensor-indexed bank of linear filters: sample construction,
// per-bucket Gram accumulation, regularized least-squares solve, edge-gated
// inference, and the binary bank file.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "skyline/edges.hpp"
#include "skyline/image.hpp"
#include "skyline/tensor.hpp"

namespace skyline {

struct TrainingSample {
  Patch patch;  // grayscale, side*side
  double target = 0.0;
  BucketIndex bucket;
};

struct SamplingParams {
  int side = 7;
  int exclusion_margin = 10;  // negatives must be farther than this (rows) from the skyline
  double positive_target = 1.0;
  double negative_target = 0.0;
  std::uint64_t seed = 0;
};

struct SampleSet {
  std::vector<TrainingSample> samples;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  /// Set when fewer eligible negatives than positives existed; all available
  /// negatives were taken instead.
  bool insufficient_negatives = false;
  std::vector<std::string> warnings;
};

/// One positive per column at the ground-truth row and an equal number of
/// negatives drawn without replacement (seeded) from edge pixels farther than
/// the exclusion margin from the ground truth in their column.
SampleSet collect_samples(const RgbImage& img, std::span<const int> gt_rows, const CannyParams& canny_params,
                          const TensorParams& tensor_params, const QuantizerConfig& quantizer,
                          const SamplingParams& params);

/// Same as above with precomputed intermediates (used by the training driver).
SampleSet collect_samples(const GrayImage& gray, const EdgeMap& edges, const FeatureField& features,
                          std::span<const int> gt_rows, const QuantizerConfig& quantizer,
                          const SamplingParams& params);

class GramAccumulator {
 public:
  GramAccumulator(int side, int bucket_count);

  int side() const noexcept { return side_; }
  int taps() const noexcept { return side_ * side_; }
  int bucket_count() const noexcept { return static_cast<int>(grams_.size()); }

  /// G_k += [x; u][x; u]^T. Throws DimensionMismatch on a wrong patch length
  /// or out-of-range bucket.
  void accumulate(const TrainingSample& s);
  void accumulate(std::span<const double> patch, double target, BucketIndex bucket);

  /// Adds another accumulator bucket-wise. Throws ConfigMismatch when the
  /// side or bucket count differ.
  void merge(const GramAccumulator& other);

  std::size_t count(int bucket) const { return counts_.at(bucket); }
  std::size_t total_count() const noexcept;
  /// (taps+1)x(taps+1) Gram matrix; a zero matrix for an empty bucket.
  Eigen::MatrixXd gram(int bucket) const;

  Eigen::MatrixXd ata(int bucket) const;
  Eigen::VectorXd atb(int bucket) const;
  double btb(int bucket) const;

 private:
  int side_;
  std::vector<Eigen::MatrixXd> grams_;  // empty until the bucket sees a sample
  std::vector<std::size_t> counts_;
};

GramAccumulator merge(const GramAccumulator& a, const GramAccumulator& b);

/// Q = s * (smoothness * L^T L + ridge * I), where L is the 2-D Laplacian over
/// filter taps (free boundary) and s is the bucket's sample count when
/// `scale_by_count` is set, else 1.
struct Regularizer {
  double smoothness = 1e-2;
  double ridge = 1e-4;
  bool scale_by_count = true;

  Eigen::MatrixXd matrix(int side, std::size_t sample_count) const;
};

/// Graph Laplacian of the side x side tap grid with 4-neighbor coupling.
Eigen::MatrixXd tap_laplacian(int side);

struct FilterBank {
  int side = 7;
  QuantizerConfig quantizer;
  std::vector<std::vector<double>> filters;  // bucket_count entries of side*side coefficients
  std::vector<std::uint8_t> trained_mask;

  int bucket_count() const noexcept { return static_cast<int>(filters.size()); }
  std::size_t trained_count() const noexcept;
  /// Every filter set to the center-tap delta, nothing trained.
  static FilterBank delta(int side, const QuantizerConfig& quantizer);
};

/// Solves (Q + A^T A) h = A^T b per bucket with count >= min_samples. Buckets
/// below min_samples receive the mean of the trained filters (the center-tap
/// delta when nothing trained). Throws InvalidParameter unless ridge > 0,
/// SolveFailure when a factorization fails.
FilterBank solve_bank(const GramAccumulator& acc, const Regularizer& reg, std::size_t min_samples,
                      const QuantizerConfig& quantizer);

enum class ScoreNormalization {
  Clamp,   // clamp raw scores to [0,1]
  MinMax,  // per-image min-max over the edge pixels
};

class ScoreMap {
 public:
  ScoreMap() = default;
  ScoreMap(int width, int height)
      : width_(width), height_(height), values_(static_cast<std::size_t>(width) * height, 0.0),
        present_(static_cast<std::size_t>(width) * height, 0) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool has(int x, int y) const noexcept { return present_[index(x, y)] != 0; }
  /// Score at a present pixel; undefined content for absent pixels.
  double at(int x, int y) const noexcept { return values_[index(x, y)]; }
  void set(int x, int y, double v) noexcept {
    values_[index(x, y)] = v;
    present_[index(x, y)] = 1;
  }
  std::size_t count() const noexcept;

  std::vector<double>& raw_values() noexcept { return values_; }
  const std::vector<std::uint8_t>& present() const noexcept { return present_; }

 private:
  std::size_t index(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> present_;
};

/// Raw filter responses h^{s(i)} . R_i z at every edge pixel.
ScoreMap predict_raw(const FilterBank& bank, const GrayImage& gray, const FeatureField& features,
                     const EdgeMap& edges);

ScoreMap normalize_scores(ScoreMap raw, ScoreNormalization mode);

ScoreMap predict(const FilterBank& bank, const GrayImage& gray, const FeatureField& features, const EdgeMap& edges,
                 ScoreNormalization mode = ScoreNormalization::Clamp);
ScoreMap predict(const FilterBank& bank, const RgbImage& img, const EdgeMap& edges,
                 const TensorParams& tensor_params = {}, ScoreNormalization mode = ScoreNormalization::Clamp);

// Bank file: little-endian
//   "RDGL" | u16 version=1 | u16 side | u16 orientation_bins | u16 strength_bins
//   | u16 coherence_bins | u16 n_strength_edges | f32[n] | u16 n_coherence_edges
//   | f32[n] | f32[K * side^2] coefficients in bucket order | u8[K] trained mask
inline constexpr std::uint16_t kBankVersion = 1;

std::vector<std::uint8_t> serialize_bank(const FilterBank& bank);
/// Throws BadBankFile on bad magic or truncation, BankVersionMismatch on an
/// unknown version.
FilterBank deserialize_bank(std::span<const std::uint8_t> bytes);
void save_bank(const FilterBank& bank, const std::filesystem::path& path);
FilterBank load_bank(const std::filesystem::path& path);

}  // namespace skyline
