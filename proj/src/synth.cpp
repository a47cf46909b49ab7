#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "skyline/error.hpp"
#include "skyline/eval.hpp"
#include "skyline/image_io.hpp"

namespace skyline {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Engine-only randomness: the standard distributions are implementation
// defined, so uniform and normal draws are derived from raw engine output.
class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(uniform() * (hi - lo + 1)); }
  double normal() {
    const double u1 = std::max(uniform(), 0x1.0p-53);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  bool coin(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

// Piecewise-linear curve through evenly spaced knots, evaluated at column centers.
std::vector<double> polyline(SceneRng& rng, int width, int knots, double base, double spread, double max_slope) {
  std::vector<double> ky(static_cast<std::size_t>(knots));
  const double step = static_cast<double>(width) / (knots - 1);
  ky[0] = base + rng.uniform(-spread, spread);
  for (int k = 1; k < knots; ++k) {
    const double target = base + rng.uniform(-spread, spread);
    const double limit = max_slope * step;
    ky[k] = std::clamp(target, ky[k - 1] - limit, ky[k - 1] + limit);
  }
  std::vector<double> y(static_cast<std::size_t>(width));
  for (int x = 0; x < width; ++x) {
    const double xc = x + 0.5;
    const int k = std::min(knots - 2, static_cast<int>(xc / step));
    const double t = (xc - k * step) / step;
    y[x] = ky[k] * (1.0 - t) + ky[k + 1] * t;
  }
  return y;
}

// Bilinear value noise on a coarse lattice, amplitude roughly [-1, 1].
class ValueNoise {
 public:
  ValueNoise(SceneRng& rng, int width, int height, int cell)
      : cell_(cell), gw_(width / cell + 2), gh_(height / cell + 2), lattice_(static_cast<std::size_t>(gw_) * gh_) {
    for (double& v : lattice_) v = rng.uniform(-1.0, 1.0);
  }

  double at(int x, int y) const {
    const double fx = static_cast<double>(x) / cell_;
    const double fy = static_cast<double>(y) / cell_;
    const int ix = static_cast<int>(fx);
    const int iy = static_cast<int>(fy);
    const double tx = fx - ix;
    const double ty = fy - iy;
    auto v = [&](int gx, int gy) { return lattice_[static_cast<std::size_t>(gy) * gw_ + gx]; };
    const double top = v(ix, iy) * (1 - tx) + v(ix + 1, iy) * tx;
    const double bottom = v(ix, iy + 1) * (1 - tx) + v(ix + 1, iy + 1) * tx;
    return top * (1 - ty) + bottom * ty;
  }

 private:
  int cell_;
  int gw_;
  int gh_;
  std::vector<double> lattice_;
};

struct Ridge {
  std::vector<double> y;
  std::array<double, 3> shift;  // added to the terrain below the ridge line
};

}  // namespace

SynthScene synth_scene(int width, int height, std::uint64_t seed) {
  if (width < 32 || height < 32) throw Error(ErrorCode::InvalidParameter, "synthetic images need at least 32x32");
  SceneRng rng(seed);
  const double h = static_cast<double>(height);

  // Skyline: jagged polyline plus a little high-frequency roughness.
  const int knots = rng.integer(6, 10);
  std::vector<double> sky_line = polyline(rng, width, knots, rng.uniform(0.30, 0.45) * h, 0.12 * h, 1.1);
  const double rough_amp = rng.uniform(0.5, 1.5);
  const double rough_freq = rng.uniform(0.15, 0.35);
  const double rough_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  for (int x = 0; x < width; ++x) {
    sky_line[x] += rough_amp * std::sin(rough_freq * x + rough_phase);
    sky_line[x] = std::clamp(sky_line[x], 4.0, h - 12.0);
  }

  // Distractor ridges: flatter curves below the skyline that change terrain tone.
  std::vector<Ridge> ridges;
  const int ridge_count = rng.integer(1, 3);
  double max_sky = 0.0;
  for (double v : sky_line) max_sky = std::max(max_sky, v);
  for (int r = 0; r < ridge_count; ++r) {
    const double lo = std::min(max_sky + 0.02 * h, h - 0.15 * h);
    const double base = rng.uniform(lo, std::max(lo + 1.0, 0.85 * h));
    Ridge ridge{polyline(rng, width, rng.integer(3, 5), base, 0.04 * h, 0.3), {}};
    const bool lighter = rng.coin(0.6);
    const double amount = lighter ? rng.uniform(0.12, 0.30) : -rng.uniform(0.08, 0.18);
    ridge.shift = {amount, amount * rng.uniform(0.85, 1.05), amount * rng.uniform(0.7, 1.0)};
    ridges.push_back(std::move(ridge));
  }

  const std::array<double, 3> sky_top{rng.uniform(0.45, 0.60), rng.uniform(0.60, 0.72), rng.uniform(0.85, 0.95)};
  const std::array<double, 3> sky_horizon{rng.uniform(0.75, 0.85), rng.uniform(0.82, 0.90), rng.uniform(0.90, 0.98)};
  const double tone = rng.uniform(0.7, 1.2);
  const std::array<double, 3> terrain{0.30 * tone, 0.27 * tone, 0.20 * tone};
  // Haze lifts the far terrain toward the sky color and lowers skyline contrast.
  const double haze = rng.coin(0.3) ? rng.uniform(0.25, 0.5) : rng.uniform(0.0, 0.15);
  const ValueNoise texture(rng, width, height, 6);
  const ValueNoise coarse(rng, width, height, 24);

  RgbImage img(width, height);
  GroundTruth gt;
  gt.rows.resize(static_cast<std::size_t>(width));
  for (int x = 0; x < width; ++x) {
    const double ys = sky_line[x];
    gt.rows[x] = std::clamp(static_cast<int>(std::floor(ys)), 0, height - 1);
    for (int y = 0; y < height; ++y) {
      const double t = std::clamp(static_cast<double>(y) / std::max(ys, 1.0), 0.0, 1.0);
      std::array<double, 3> sky{};
      for (int c = 0; c < 3; ++c) sky[c] = sky_top[c] * (1.0 - t) + sky_horizon[c] * t + 0.01 * rng.normal();

      std::array<double, 3> ground = terrain;
      const double depth = std::clamp((y - ys) / (0.4 * h), 0.0, 1.0);
      for (int c = 0; c < 3; ++c) {
        ground[c] = ground[c] * (1.0 - haze * (1.0 - depth)) + sky_horizon[c] * 0.8 * haze * (1.0 - depth);
      }
      for (const Ridge& ridge : ridges) {
        if (ridge.y[x] < ys + 12.0) continue;
        const double cover = std::clamp(y + 1.0 - ridge.y[x], 0.0, 1.0);
        for (int c = 0; c < 3; ++c) ground[c] += cover * ridge.shift[c];
      }
      const double grain = 0.05 * texture.at(x, y) + 0.04 * coarse.at(x, y);
      for (int c = 0; c < 3; ++c) ground[c] += grain + 0.015 * rng.normal();

      // Fraction of the pixel row [y, y+1) lying below the skyline.
      const double below = std::clamp(y + 1.0 - ys, 0.0, 1.0);
      std::array<double, 3> rgb{};
      for (int c = 0; c < 3; ++c) rgb[c] = sky[c] * (1.0 - below) + ground[c] * below;
      img.set_rgb(x, y, rgb);
    }
  }
  return {std::move(img), std::move(gt)};
}

SynthSummary synth_generate(const SynthParams& params, const fs::path& out_dir) {
  if (params.count < 0) throw Error(ErrorCode::InvalidParameter, "synthetic image count must be >= 0");
  if (params.width < 32 || params.height < 32) {
    throw Error(ErrorCode::InvalidParameter, "synthetic images need at least 32x32");
  }
  fs::create_directories(out_dir);
  SynthSummary summary;
  for (int i = 0; i < params.count; ++i) {
    const std::uint64_t image_seed = splitmix64(params.seed) ^ splitmix64(static_cast<std::uint64_t>(i) + 1);
    const SynthScene scene = synth_scene(params.width, params.height, image_seed);
    char stem[32];
    std::snprintf(stem, sizeof stem, "synth_%04d", i);
    const fs::path image_path = out_dir / (std::string(stem) + ".png");
    const fs::path gt_path = out_dir / (std::string(stem) + ".csv");
    save_png(scene.image, image_path);
    write_ground_truth(gt_path, scene.gt.rows);
    summary.images.push_back(image_path);
    summary.ground_truths.push_back(gt_path);
  }
  return summary;
}

}  // namespace skyline
