#include "skyline/edges.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "skyline/error.hpp"

namespace skyline {

std::size_t EdgeMap::count() const noexcept {
  return static_cast<std::size_t>(std::count(mask_.begin(), mask_.end(), std::uint8_t{1}));
}

double edge_density(const EdgeMap& map) noexcept {
  if (map.mask().empty()) return 0.0;
  return static_cast<double>(map.count()) / static_cast<double>(map.mask().size());
}

Plane gaussian_blur(const Plane& src, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidParameter, "blur sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& k : kernel) k /= sum;

  const int w = src.width();
  const int h = src.height();
  Plane tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * src.at(reflect101(x + i, w), y);
      tmp.at(x, y) = acc;
    }
  }
  Plane out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp.at(x, reflect101(y + i, h));
      out.at(x, y) = acc;
    }
  }
  return out;
}

namespace {

// Neighbor offsets along the quantized gradient direction.
struct Direction {
  int dx;
  int dy;
};

Direction quantize_direction(double gx, double gy) {
  // Angle of the gradient folded into [0, 180) degrees.
  double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
  if (angle < 0.0) angle += 180.0;
  if (angle < 22.5 || angle >= 157.5) return {1, 0};
  if (angle < 67.5) return {1, 1};
  if (angle < 112.5) return {0, 1};
  return {-1, 1};
}

}  // namespace

EdgeMap canny(const GrayImage& img, const CannyParams& params) {
  if (!(params.low > 0.0) || !(params.low < params.high) || !(params.high <= 1.0)) {
    throw Error(ErrorCode::BadThresholds, "need 0 < low < high <= 1, got low=" + std::to_string(params.low) +
                                              " high=" + std::to_string(params.high));
  }
  if (!(params.sigma > 0.0)) throw Error(ErrorCode::InvalidParameter, "canny sigma must be positive");

  const int w = img.width();
  const int h = img.height();
  const Plane smoothed = gaussian_blur(img.plane(), params.sigma);
  const GradientField g = gradient(smoothed);

  double max_mag = 0.0;
  for (double m : g.magnitude.values()) max_mag = std::max(max_mag, m);
  EdgeMap edges(w, h);
  if (max_mag <= 0.0) return edges;

  const double scale = params.mode == ThresholdMode::RelativeToMax ? max_mag : 1.0;
  const double low = params.low * scale;
  const double high = params.high * scale;

  // 0 = suppressed, 1 = weak candidate, 2 = strong seed.
  std::vector<std::uint8_t> state(static_cast<std::size_t>(w) * h, 0);
  std::vector<int> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double m = g.magnitude.at(x, y);
      if (m < low || m <= 0.0) continue;
      const Direction d = quantize_direction(g.gx.at(x, y), g.gy.at(x, y));
      const int ax = x - d.dx, ay = y - d.dy;
      const int bx = x + d.dx, by = y + d.dy;
      const double ma = (ax >= 0 && ay >= 0 && ax < w && ay < h) ? g.magnitude.at(ax, ay) : 0.0;
      const double mb = (bx >= 0 && by >= 0 && bx < w && by < h) ? g.magnitude.at(bx, by) : 0.0;
      // Asymmetric comparison so a plateau of two equal maxima keeps one pixel.
      if (!(m > ma && m >= mb)) continue;
      const std::size_t idx = static_cast<std::size_t>(y) * w + x;
      if (m >= high) {
        state[idx] = 2;
        stack.push_back(static_cast<int>(idx));
      } else {
        state[idx] = 1;
      }
    }
  }

  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    const int x = idx % w;
    const int y = idx / w;
    edges.set(x, y, true);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = x + dx, ny = y + dy;
        if ((dx == 0 && dy == 0) || nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
        if (state[n] == 1) {
          state[n] = 2;
          stack.push_back(static_cast<int>(n));
        }
      }
    }
  }
  return edges;
}

}  // namespace skyline
