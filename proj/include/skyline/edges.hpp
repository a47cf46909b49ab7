#pragma once

#include <cstdint>
#include <vector>

#include "skyline/image.hpp"

namespace skyline {

class EdgeMap {
 public:
  EdgeMap() = default;
  EdgeMap(int width, int height) : width_(width), height_(height), mask_(static_cast<std::size_t>(width) * height, 0) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool at(int x, int y) const noexcept { return mask_[index(x, y)] != 0; }
  void set(int x, int y, bool on) noexcept { mask_[index(x, y)] = on ? 1 : 0; }
  std::size_t count() const noexcept;

  const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> mask_;
};

enum class ThresholdMode {
  RelativeToMax,  // thresholds are fractions of the image's max gradient magnitude
  Absolute,       // thresholds are gradient magnitudes (intensity per pixel)
};

struct CannyParams {
  double sigma = 1.4;
  double low = 0.1;
  double high = 0.2;
  ThresholdMode mode = ThresholdMode::RelativeToMax;
};

/// Canny detector: Gaussian blur at `sigma`, Sobel gradients, non-maximum
/// suppression over 4 quantized directions, double-threshold hysteresis with
/// 8-connected linking. Throws BadThresholds unless 0 < low < high <= 1, and
/// InvalidParameter for sigma <= 0.
EdgeMap canny(const GrayImage& img, const CannyParams& params = {});

/// Separable Gaussian blur with reflect-101 borders, radius ceil(3 sigma).
Plane gaussian_blur(const Plane& src, double sigma);

double edge_density(const EdgeMap& map) noexcept;

}  // namespace skyline
