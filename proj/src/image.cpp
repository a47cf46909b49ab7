#include "skyline/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skyline/error.hpp"

namespace skyline {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::BadPatchSize: return "BadPatchSize";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::BadThresholds: return "BadThresholds";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::SolveFailure: return "SolveFailure";
    case ErrorCode::WeightOutOfRange: return "WeightOutOfRange";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingDirectory: return "MissingDirectory";
    case ErrorCode::MalformedGroundTruth: return "MalformedGroundTruth";
    case ErrorCode::NoTrainingPairs: return "NoTrainingPairs";
    case ErrorCode::NoMatchedPairs: return "NoMatchedPairs";
    case ErrorCode::BankVersionMismatch: return "BankVersionMismatch";
    case ErrorCode::BadBankFile: return "BadBankFile";
    case ErrorCode::UnknownMethod: return "UnknownMethod";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

int reflect101(int index, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  int i = index % period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

Plane::Plane(int width, int height, double fill)
    : width_(width),
      height_(height),
      data_(static_cast<std::size_t>(std::max(width, 0)) * static_cast<std::size_t>(std::max(height, 0)),
            fill) {
  if (width < 1 || height < 1) {
    throw Error(ErrorCode::InvalidParameter,
                "image dimensions must be positive, got " + std::to_string(width) + "x" +
                    std::to_string(height));
  }
}

GrayImage::GrayImage(int width, int height, double fill)
    : plane_(width, height, std::clamp(fill, 0.0, 1.0)) {}

GrayImage::GrayImage(Plane plane) : plane_(std::move(plane)) {
  for (double v : plane_.values()) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw Error(ErrorCode::NonFiniteInput, "gray intensity outside [0,1]");
    }
  }
}

void GrayImage::set(int x, int y, double v) noexcept {
  plane_.at(x, y) = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
}

RgbImage::RgbImage(int width, int height, std::array<double, 3> fill)
    : width_(width),
      height_(height),
      channels_{Plane(width, height, std::clamp(fill[0], 0.0, 1.0)),
                Plane(width, height, std::clamp(fill[1], 0.0, 1.0)),
                Plane(width, height, std::clamp(fill[2], 0.0, 1.0))} {}

void RgbImage::set(int channel, int x, int y, double v) noexcept {
  channels_[channel].at(x, y) = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
}

void RgbImage::set_rgb(int x, int y, std::array<double, 3> rgb) noexcept {
  for (int c = 0; c < 3; ++c) set(c, x, y, rgb[c]);
}

GrayImage RgbImage::channel_image(int c) const { return GrayImage(channels_[c]); }

RgbImage RgbImage::from_gray(const GrayImage& gray) {
  RgbImage out(gray.width(), gray.height());
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < gray.width(); ++x) {
      const double v = gray.at(x, y);
      out.set_rgb(x, y, {v, v, v});
    }
  }
  return out;
}

GrayImage to_grayscale(const RgbImage& img) {
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out.set(x, y, 0.299 * img.at(0, x, y) + 0.587 * img.at(1, x, y) + 0.114 * img.at(2, x, y));
    }
  }
  return out;
}

GradientField gradient(const Plane& src) {
  const int w = src.width();
  const int h = src.height();
  if (w < 3 || h < 3) {
    throw Error(ErrorCode::ImageTooSmall, "gradient needs at least 3x3, got " +
                                              std::to_string(w) + "x" + std::to_string(h));
  }
  GradientField g{Plane(w, h), Plane(w, h), Plane(w, h)};
  for (int y = 0; y < h; ++y) {
    const int ym = reflect101(y - 1, h);
    const int yp = reflect101(y + 1, h);
    for (int x = 0; x < w; ++x) {
      const int xm = reflect101(x - 1, w);
      const int xp = reflect101(x + 1, w);
      const double dx = (src.at(xp, ym) - src.at(xm, ym)) +
                        2.0 * (src.at(xp, y) - src.at(xm, y)) +
                        (src.at(xp, yp) - src.at(xm, yp));
      const double dy = (src.at(xm, yp) - src.at(xm, ym)) +
                        2.0 * (src.at(x, yp) - src.at(x, ym)) +
                        (src.at(xp, yp) - src.at(xp, ym));
      const double gx = dx / 8.0;
      const double gy = dy / 8.0;
      g.gx.at(x, y) = gx;
      g.gy.at(x, y) = gy;
      g.magnitude.at(x, y) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return g;
}

GradientField gradient(const GrayImage& img) { return gradient(img.plane()); }

namespace {

void check_patch_side(int side) {
  if (side < 3 || side % 2 == 0) {
    throw Error(ErrorCode::BadPatchSize, "patch side must be odd and >= 3, got " + std::to_string(side));
  }
}

}  // namespace

void extract_patch_into(const GrayImage& img, Pixel center, int side, std::span<double> out) {
  check_patch_side(side);
  if (out.size() != static_cast<std::size_t>(side) * static_cast<std::size_t>(side)) {
    throw Error(ErrorCode::DimensionMismatch, "patch buffer has wrong size");
  }
  const int r = side / 2;
  const bool interior = center.x - r >= 0 && center.y - r >= 0 && center.x + r < img.width() &&
                        center.y + r < img.height();
  std::size_t k = 0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      out[k++] = interior ? img.at(center.x + dx, center.y + dy)
                          : img.at_reflect(center.x + dx, center.y + dy);
    }
  }
}

Patch extract_patch(const GrayImage& img, Pixel center, int side) {
  check_patch_side(side);
  Patch p{side, std::vector<double>(static_cast<std::size_t>(side) * static_cast<std::size_t>(side))};
  extract_patch_into(img, center, side, p.values);
  return p;
}

std::vector<double> normalize01(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "normalize01 on empty field");
  double lo = values.front();
  double hi = values.front();
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "normalize01 on non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  std::vector<double> out(values.size(), 0.0);
  if (hi > lo) {
    const double range = hi - lo;
    for (std::size_t i = 0; i < values.size(); ++i) {
      out[i] = std::clamp((values[i] - lo) / range, 0.0, 1.0);
    }
  }
  return out;
}

Plane normalize01(const Plane& plane) {
  Plane out(plane.width(), plane.height());
  const auto normalized = normalize01(plane.values());
  std::copy(normalized.begin(), normalized.end(), out.values().begin());
  return out;
}

}  // namespace skyline
