#include "skyline/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "skyline/error.hpp"

namespace skyline {

void QuantizerConfig::validate() const {
  if (orientation_bins < 1 || strength_bins < 1 || coherence_bins < 1) {
    throw Error(ErrorCode::InvalidParameter, "quantizer bin counts must be positive");
  }
  auto check_edges = [](const std::vector<double>& edges, int bins, const char* name) {
    if (static_cast<int>(edges.size()) != bins - 1) {
      throw Error(ErrorCode::InvalidParameter, std::string(name) + " edges must have bins-1 entries");
    }
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (!std::isfinite(edges[i]) || (i > 0 && !(edges[i] > edges[i - 1]))) {
        throw Error(ErrorCode::InvalidParameter, std::string(name) + " edges must be strictly ascending");
      }
    }
  };
  check_edges(strength_edges, strength_bins, "strength");
  check_edges(coherence_edges, coherence_bins, "coherence");
}

std::vector<double> gaussian_window(int side, double sigma) {
  if (side < 3 || side % 2 == 0) throw Error(ErrorCode::InvalidParameter, "tensor window must be odd and >= 3");
  if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidParameter, "tensor weight sigma must be positive");
  const int r = side / 2;
  std::vector<double> w(static_cast<std::size_t>(side) * side);
  double sum = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double v = std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
      w[static_cast<std::size_t>(dy + r) * side + (dx + r)] = v;
      sum += v;
    }
  }
  for (double& v : w) v /= sum;
  return w;
}

TensorField tensor_field(const RgbImage& img, const TensorParams& params) {
  const auto weights = gaussian_window(params.window, params.weight_sigma);
  const int w = img.width();
  const int h = img.height();

  // Per-pixel outer products summed over channels before windowing.
  Plane pxx(w, h), pxy(w, h), pyy(w, h);
  for (int c = 0; c < 3; ++c) {
    const GradientField g = gradient(img.channel(c));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double gx = g.gx.at(x, y);
        const double gy = g.gy.at(x, y);
        pxx.at(x, y) += gx * gx;
        pxy.at(x, y) += gx * gy;
        pyy.at(x, y) += gy * gy;
      }
    }
  }

  const int r = params.window / 2;
  TensorField field(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      StructureTensor t;
      std::size_t k = 0;
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = reflect101(y + dy, h);
        for (int dx = -r; dx <= r; ++dx, ++k) {
          const int xx = reflect101(x + dx, w);
          t.txx += weights[k] * pxx.at(xx, yy);
          t.txy += weights[k] * pxy.at(xx, yy);
          t.tyy += weights[k] * pyy.at(xx, yy);
        }
      }
      field.at(x, y) = t;
    }
  }
  return field;
}

TensorFeatures eigen_features(const StructureTensor& t) noexcept {
  const double txx = std::max(t.txx, 0.0);
  const double tyy = std::max(t.tyy, 0.0);
  const double txy = t.txy;

  const double trace = txx + tyy;
  const double disc = std::hypot(txx - tyy, 2.0 * txy);
  const double lambda1 = std::max(0.5 * (trace + disc), 0.0);

  // det via an error-compensated product difference; the smaller eigenvalue
  // is det / lambda1, which avoids the cancellation in (trace - disc) / 2.
  const double prod = txy * txy;
  const double err = std::fma(-txy, txy, prod);
  double det = std::fma(txx, tyy, -prod) + err;
  // A determinant inside the rounding noise of the inputs is a rank-1 tensor.
  constexpr double kRankTol = 256.0 * std::numeric_limits<double>::epsilon();
  if (det <= kRankTol * txx * tyy) det = 0.0;
  const double lambda2 = lambda1 > 0.0 ? std::clamp(det / lambda1, 0.0, lambda1) : 0.0;

  TensorFeatures f;
  f.strength = std::sqrt(lambda1);
  const double s2 = std::sqrt(lambda2);
  const double denom = f.strength + s2;
  f.coherence = denom < 1e-12 ? 0.0 : std::clamp((f.strength - s2) / denom, 0.0, 1.0);

  double theta = 0.5 * std::atan2(2.0 * txy, txx - tyy);
  if (theta < 0.0) theta += std::numbers::pi;
  if (theta >= std::numbers::pi) theta -= std::numbers::pi;
  f.orientation = theta;
  return f;
}

FeatureField feature_field(const TensorField& field) {
  FeatureField out{field.width(), field.height(), {}};
  out.features.resize(static_cast<std::size_t>(field.width()) * field.height());
  for (int y = 0; y < field.height(); ++y) {
    for (int x = 0; x < field.width(); ++x) {
      out.features[static_cast<std::size_t>(y) * field.width() + x] = eigen_features(field.at(x, y));
    }
  }
  return out;
}

Plane FeatureField::strength_plane() const {
  Plane p(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) p.at(x, y) = at(x, y).strength;
  }
  return p;
}

BucketIndex quantize(const TensorFeatures& f, const QuantizerConfig& q) noexcept {
  int ob = static_cast<int>(std::floor(f.orientation / std::numbers::pi * q.orientation_bins));
  ob = std::clamp(ob, 0, q.orientation_bins - 1);
  const auto bin_of = [](const std::vector<double>& edges, double v) {
    return static_cast<int>(std::upper_bound(edges.begin(), edges.end(), v) - edges.begin());
  };
  const int sb = std::clamp(bin_of(q.strength_edges, f.strength), 0, q.strength_bins - 1);
  const int cb = std::clamp(bin_of(q.coherence_edges, f.coherence), 0, q.coherence_bins - 1);
  return {(ob * q.strength_bins + sb) * q.coherence_bins + cb};
}

}  // namespace skyline
