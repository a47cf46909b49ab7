#pragma once

// Dense image containers and the low-level operations shared by every stage
// of the pipeline. Intensities are doubles normalized to [0,1]; storage is
// row-major with (x, y) = (column, row).

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace skyline {

struct Pixel {
  int x = 0;
  int y = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Reflect-101 index mirroring: ...2 1 | 0 1 2 ... n-1 | n-2 n-3...
/// Valid for any integer index as long as n >= 1.
int reflect101(int index, int n) noexcept;

/// Single-channel plane of doubles. No range invariant; used for gradients,
/// cost fields and other derived quantities.
class Plane {
 public:
  Plane() = default;
  Plane(int width, int height, double fill = 0.0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& at(int x, int y) noexcept { return data_[index(x, y)]; }
  double at(int x, int y) const noexcept { return data_[index(x, y)]; }
  /// Border-safe read with reflect-101 mirroring.
  double at_reflect(int x, int y) const noexcept {
    return at(reflect101(x, width_), reflect101(y, height_));
  }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// Grayscale image with intensities in [0,1].
class GrayImage {
 public:
  GrayImage() = default;
  /// Throws InvalidParameter for non-positive dimensions.
  GrayImage(int width, int height, double fill = 0.0);
  /// Takes ownership of a plane; throws NonFiniteInput if any value is not
  /// finite or lies outside [0,1].
  explicit GrayImage(Plane plane);

  int width() const noexcept { return plane_.width(); }
  int height() const noexcept { return plane_.height(); }
  double at(int x, int y) const noexcept { return plane_.at(x, y); }
  double at_reflect(int x, int y) const noexcept { return plane_.at_reflect(x, y); }
  /// Writes are clamped to [0,1].
  void set(int x, int y, double v) noexcept;

  const Plane& plane() const noexcept { return plane_; }

 private:
  Plane plane_;
};

/// Three-plane RGB image, intensities in [0,1].
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, std::array<double, 3> fill = {0.0, 0.0, 0.0});

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double at(int channel, int x, int y) const noexcept { return channels_[channel].at(x, y); }
  void set(int channel, int x, int y, double v) noexcept;
  void set_rgb(int x, int y, std::array<double, 3> rgb) noexcept;

  const Plane& channel(int c) const noexcept { return channels_[c]; }
  /// View the single channel as a GrayImage (validated copy).
  GrayImage channel_image(int c) const;

  static RgbImage from_gray(const GrayImage& gray);

 private:
  int width_ = 0;
  int height_ = 0;
  std::array<Plane, 3> channels_;
};

struct GradientField {
  Plane gx;
  Plane gy;
  Plane magnitude;
};

struct Patch {
  int side = 0;
  std::vector<double> values;  // side*side, row-major

  double center() const noexcept { return values[(values.size() - 1) / 2]; }
};

/// ITU-R BT.601 luma, clamped to [0,1].
GrayImage to_grayscale(const RgbImage& img);

/// Normalized 3x3 Sobel derivatives (kernel scaled by 1/8 so that a linear
/// ramp with slope s yields exactly s) with reflect-101 borders.
/// Throws ImageTooSmall when either dimension is below 3.
GradientField gradient(const GrayImage& img);
GradientField gradient(const Plane& plane);

/// side x side window centered on `center`, reflect-101 outside the image.
/// Throws BadPatchSize when side is even or below 3.
Patch extract_patch(const GrayImage& img, Pixel center, int side);
/// Allocation-free variant writing side*side values into `out`.
void extract_patch_into(const GrayImage& img, Pixel center, int side, std::span<double> out);

/// Min-max normalization to [0,1]. A degenerate range maps to all zeros.
/// Throws NonFiniteInput on NaN/inf, EmptyInput on an empty field.
std::vector<double> normalize01(std::span<const double> values);
Plane normalize01(const Plane& plane);

}  // namespace skyline
