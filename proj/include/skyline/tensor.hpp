#pragma once

// Joint-color structure tensor, its eigen features, and the quantizer that
// turns features into a filter-bank bucket index.

#include <cstdint>
#include <vector>

#include "skyline/image.hpp"

namespace skyline {

struct StructureTensor {
  double txx = 0.0;
  double txy = 0.0;
  double tyy = 0.0;
};

struct TensorFeatures {
  double orientation = 0.0;  // radians, [0, pi)
  double strength = 0.0;     // sqrt(lambda1)
  double coherence = 0.0;    // [0, 1]
};

struct TensorParams {
  int window = 7;
  double weight_sigma = 1.5;
};

class TensorField {
 public:
  TensorField() = default;
  TensorField(int width, int height) : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  StructureTensor& at(int x, int y) noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const StructureTensor& at(int x, int y) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<StructureTensor> data_;
};

/// Per-pixel features for a whole image.
struct FeatureField {
  int width = 0;
  int height = 0;
  std::vector<TensorFeatures> features;

  const TensorFeatures& at(int x, int y) const noexcept {
    return features[static_cast<std::size_t>(y) * width + x];
  }
  /// sqrt(lambda1) as a plane, for fusion with prediction scores.
  Plane strength_plane() const;
};

struct QuantizerConfig {
  int orientation_bins = 16;
  int strength_bins = 6;
  int coherence_bins = 3;
  std::vector<double> strength_edges{0.02, 0.05, 0.1, 0.2, 0.4};
  std::vector<double> coherence_edges{1.0 / 3.0, 2.0 / 3.0};

  int bucket_count() const noexcept { return orientation_bins * strength_bins * coherence_bins; }
  /// Throws InvalidParameter on non-positive bin counts or edge lists that are
  /// not strictly ascending with exactly bins-1 entries.
  void validate() const;

  friend bool operator==(const QuantizerConfig&, const QuantizerConfig&) = default;
};

struct BucketIndex {
  int index = 0;
  friend bool operator==(const BucketIndex&, const BucketIndex&) = default;
};

/// T_i = sum_c sum_{j in window(i)} w_j g_j^c (g_j^c)^T with normalized
/// Gaussian weights and reflect-101 at the borders. Gradients come from
/// `gradient()` applied to each channel.
/// Throws ImageTooSmall (< 3x3) and InvalidParameter (even/small window,
/// non-positive weight_sigma).
TensorField tensor_field(const RgbImage& img, const TensorParams& params = {});

/// Normalized window weights, row-major, side*side entries summing to 1.
std::vector<double> gaussian_window(int side, double sigma);

/// Closed-form eigen analysis of the symmetric 2x2 tensor.
TensorFeatures eigen_features(const StructureTensor& t) noexcept;

FeatureField feature_field(const TensorField& field);

BucketIndex quantize(const TensorFeatures& f, const QuantizerConfig& q) noexcept;

}  // namespace skyline
