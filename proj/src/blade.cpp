#include "skyline/blade.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include "skyline/error.hpp"

namespace skyline {

namespace {

// Unbiased draw in [0, n) from the raw 64-bit engine output, so sample
// selection depends only on the engine (whose sequence is standardized).
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

void check_gt(std::span<const int> gt_rows, int width, int height) {
  if (static_cast<int>(gt_rows.size()) != width) {
    throw Error(ErrorCode::LengthMismatch, "ground truth has " + std::to_string(gt_rows.size()) +
                                               " columns, image has " + std::to_string(width));
  }
  for (int r : gt_rows) {
    if (r < 0 || r >= height) throw Error(ErrorCode::MalformedGroundTruth, "ground-truth row out of bounds");
  }
}

}  // namespace

SampleSet collect_samples(const GrayImage& gray, const EdgeMap& edges, const FeatureField& features,
                          std::span<const int> gt_rows, const QuantizerConfig& quantizer,
                          const SamplingParams& params) {
  const int w = gray.width();
  const int h = gray.height();
  check_gt(gt_rows, w, h);
  if (params.side < 3 || params.side % 2 == 0) {
    throw Error(ErrorCode::BadPatchSize, "filter side must be odd and >= 3");
  }
  if (edges.width() != w || edges.height() != h || features.width != w || features.height != h) {
    throw Error(ErrorCode::DimensionMismatch, "edge map / feature field size differs from image");
  }

  SampleSet out;
  auto make_sample = [&](int x, int y, double target) {
    TrainingSample s;
    s.patch = extract_patch(gray, {x, y}, params.side);
    s.target = target;
    s.bucket = quantize(features.at(x, y), quantizer);
    return s;
  };

  for (int x = 0; x < w; ++x) out.samples.push_back(make_sample(x, gt_rows[x], params.positive_target));
  out.positives = static_cast<std::size_t>(w);

  std::vector<std::uint32_t> pool;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (edges.at(x, y) && std::abs(y - gt_rows[x]) > params.exclusion_margin) {
        pool.push_back(static_cast<std::uint32_t>(y * w + x));
      }
    }
  }

  std::size_t wanted = out.positives;
  if (pool.size() < wanted) {
    out.insufficient_negatives = true;
    out.warnings.push_back("InsufficientNegatives: only " + std::to_string(pool.size()) +
                           " eligible negatives for " + std::to_string(wanted) + " positives");
    wanted = pool.size();
  }

  // Partial Fisher-Yates: the first `wanted` slots become the selection.
  std::mt19937_64 rng(params.seed);
  for (std::size_t i = 0; i < wanted; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded_draw(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
    const int idx = static_cast<int>(pool[i]);
    out.samples.push_back(make_sample(idx % w, idx / w, params.negative_target));
  }
  out.negatives = wanted;
  return out;
}

SampleSet collect_samples(const RgbImage& img, std::span<const int> gt_rows, const CannyParams& canny_params,
                          const TensorParams& tensor_params, const QuantizerConfig& quantizer,
                          const SamplingParams& params) {
  const GrayImage gray = to_grayscale(img);
  const EdgeMap edges = canny(gray, canny_params);
  const FeatureField features = feature_field(tensor_field(img, tensor_params));
  return collect_samples(gray, edges, features, gt_rows, quantizer, params);
}

// --- Gram accumulation -------------------------------------------------------

GramAccumulator::GramAccumulator(int side, int bucket_count)
    : side_(side), grams_(static_cast<std::size_t>(std::max(bucket_count, 0))),
      counts_(static_cast<std::size_t>(std::max(bucket_count, 0)), 0) {
  if (side < 1 || bucket_count < 1) throw Error(ErrorCode::InvalidParameter, "accumulator needs side, K >= 1");
}

void GramAccumulator::accumulate(std::span<const double> patch, double target, BucketIndex bucket) {
  const int n = taps();
  if (static_cast<int>(patch.size()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "patch has " + std::to_string(patch.size()) + " taps, expected " +
                                                  std::to_string(n));
  }
  if (bucket.index < 0 || bucket.index >= bucket_count()) {
    throw Error(ErrorCode::DimensionMismatch, "bucket index out of range");
  }
  Eigen::MatrixXd& g = grams_[bucket.index];
  if (g.size() == 0) g = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd v(n + 1);
  for (int i = 0; i < n; ++i) v[i] = patch[i];
  v[n] = target;
  g.noalias() += v * v.transpose();
  ++counts_[bucket.index];
}

void GramAccumulator::accumulate(const TrainingSample& s) { accumulate(s.patch.values, s.target, s.bucket); }

void GramAccumulator::merge(const GramAccumulator& other) {
  if (other.side_ != side_ || other.bucket_count() != bucket_count()) {
    throw Error(ErrorCode::ConfigMismatch, "cannot merge accumulators with different side or bucket count");
  }
  for (std::size_t k = 0; k < grams_.size(); ++k) {
    if (other.grams_[k].size() == 0) continue;
    if (grams_[k].size() == 0) {
      grams_[k] = other.grams_[k];
    } else {
      grams_[k] += other.grams_[k];
    }
    counts_[k] += other.counts_[k];
  }
}

GramAccumulator merge(const GramAccumulator& a, const GramAccumulator& b) {
  GramAccumulator out = a;
  out.merge(b);
  return out;
}

std::size_t GramAccumulator::total_count() const noexcept {
  std::size_t total = 0;
  for (std::size_t c : counts_) total += c;
  return total;
}

Eigen::MatrixXd GramAccumulator::gram(int bucket) const {
  const Eigen::MatrixXd& g = grams_.at(bucket);
  if (g.size() == 0) return Eigen::MatrixXd::Zero(taps() + 1, taps() + 1);
  return g;
}

Eigen::MatrixXd GramAccumulator::ata(int bucket) const {
  const int n = taps();
  return gram(bucket).topLeftCorner(n, n);
}

Eigen::VectorXd GramAccumulator::atb(int bucket) const {
  const int n = taps();
  return gram(bucket).col(n).head(n);
}

double GramAccumulator::btb(int bucket) const {
  const int n = taps();
  return gram(bucket)(n, n);
}

// --- Regularized solve -------------------------------------------------------

Eigen::MatrixXd tap_laplacian(int side) {
  const int n = side * side;
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const int p = y * side + x;
      const int nbrs[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& nb : nbrs) {
        if (nb[0] < 0 || nb[1] < 0 || nb[0] >= side || nb[1] >= side) continue;
        lap(p, nb[1] * side + nb[0]) = -1.0;
        lap(p, p) += 1.0;
      }
    }
  }
  return lap;
}

Eigen::MatrixXd Regularizer::matrix(int side, std::size_t sample_count) const {
  const double scale = scale_by_count ? static_cast<double>(sample_count) : 1.0;
  const Eigen::MatrixXd lap = tap_laplacian(side);
  Eigen::MatrixXd q = smoothness * (lap.transpose() * lap);
  q.diagonal().array() += ridge;
  return scale * q;
}

std::size_t FilterBank::trained_count() const noexcept {
  return static_cast<std::size_t>(std::count(trained_mask.begin(), trained_mask.end(), std::uint8_t{1}));
}

FilterBank FilterBank::delta(int side, const QuantizerConfig& quantizer) {
  FilterBank bank;
  bank.side = side;
  bank.quantizer = quantizer;
  std::vector<double> d(static_cast<std::size_t>(side) * side, 0.0);
  d[(d.size() - 1) / 2] = 1.0;
  bank.filters.assign(static_cast<std::size_t>(quantizer.bucket_count()), d);
  bank.trained_mask.assign(static_cast<std::size_t>(quantizer.bucket_count()), 0);
  return bank;
}

FilterBank solve_bank(const GramAccumulator& acc, const Regularizer& reg, std::size_t min_samples,
                      const QuantizerConfig& quantizer) {
  if (!(reg.ridge > 0.0) || !(reg.smoothness >= 0.0)) {
    throw Error(ErrorCode::InvalidParameter, "regularizer needs ridge > 0 and smoothness >= 0");
  }
  if (quantizer.bucket_count() != acc.bucket_count()) {
    throw Error(ErrorCode::ConfigMismatch, "quantizer bucket count differs from accumulator");
  }
  const int n = acc.taps();
  FilterBank bank = FilterBank::delta(acc.side(), quantizer);

  std::vector<double> mean(static_cast<std::size_t>(n), 0.0);
  std::size_t trained = 0;
  for (int k = 0; k < acc.bucket_count(); ++k) {
    const std::size_t count = acc.count(k);
    if (count == 0 || count < min_samples) continue;
    const Eigen::MatrixXd g = acc.gram(k);
    const Eigen::MatrixXd system = g.topLeftCorner(n, n) + reg.matrix(acc.side(), count);
    const Eigen::VectorXd rhs = g.col(n).head(n);

    const Eigen::LLT<Eigen::MatrixXd> llt(system);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::SolveFailure, "bucket " + std::to_string(k) + " system is not positive definite");
    }
    const Eigen::VectorXd h = llt.solve(rhs);
    if (!h.allFinite()) throw Error(ErrorCode::SolveFailure, "bucket " + std::to_string(k) + " produced non-finite filter");

    bank.filters[k].assign(h.data(), h.data() + n);
    bank.trained_mask[k] = 1;
    for (int i = 0; i < n; ++i) mean[i] += h[i];
    ++trained;
  }

  if (trained > 0) {
    for (double& m : mean) m /= static_cast<double>(trained);
    for (int k = 0; k < bank.bucket_count(); ++k) {
      if (!bank.trained_mask[k]) bank.filters[k] = mean;
    }
  }
  return bank;
}

// --- Inference ---------------------------------------------------------------

std::size_t ScoreMap::count() const noexcept {
  return static_cast<std::size_t>(std::count(present_.begin(), present_.end(), std::uint8_t{1}));
}

ScoreMap predict_raw(const FilterBank& bank, const GrayImage& gray, const FeatureField& features,
                     const EdgeMap& edges) {
  const int w = gray.width();
  const int h = gray.height();
  if (edges.width() != w || edges.height() != h || features.width != w || features.height != h) {
    throw Error(ErrorCode::DimensionMismatch, "edge map / feature field size differs from image");
  }
  ScoreMap scores(w, h);
  std::vector<double> patch(static_cast<std::size_t>(bank.side) * bank.side);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!edges.at(x, y)) continue;
      extract_patch_into(gray, {x, y}, bank.side, patch);
      const std::vector<double>& filter = bank.filters[quantize(features.at(x, y), bank.quantizer).index];
      double dot = 0.0;
      for (std::size_t i = 0; i < patch.size(); ++i) dot += filter[i] * patch[i];
      scores.set(x, y, dot);
    }
  }
  return scores;
}

ScoreMap normalize_scores(ScoreMap raw, ScoreNormalization mode) {
  std::vector<double>& v = raw.raw_values();
  const auto& present = raw.present();
  if (mode == ScoreNormalization::Clamp) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (present[i]) v[i] = std::isfinite(v[i]) ? std::clamp(v[i], 0.0, 1.0) : 0.0;
    }
    return raw;
  }
  std::vector<double> selected;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (present[i]) selected.push_back(v[i]);
  }
  if (selected.empty()) return raw;
  const std::vector<double> normalized = normalize01(selected);
  std::size_t k = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (present[i]) v[i] = normalized[k++];
  }
  return raw;
}

ScoreMap predict(const FilterBank& bank, const GrayImage& gray, const FeatureField& features, const EdgeMap& edges,
                 ScoreNormalization mode) {
  return normalize_scores(predict_raw(bank, gray, features, edges), mode);
}

ScoreMap predict(const FilterBank& bank, const RgbImage& img, const EdgeMap& edges,
                 const TensorParams& tensor_params, ScoreNormalization mode) {
  const FeatureField features = feature_field(tensor_field(img, tensor_params));
  return predict(bank, to_grayscale(img), features, edges, mode);
}

// --- Bank file ---------------------------------------------------------------

namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) {
    bytes_.push_back(static_cast<std::uint8_t>(v & 0xFF));
    bytes_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void f32(float f) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF));
  }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  float f32() {
    need(4);
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return std::bit_cast<float>(bits);
  }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw Error(ErrorCode::BadBankFile, "truncated filter-bank data");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint16_t checked_u16(int v, const char* what) {
  if (v < 0 || v > 0xFFFF) throw Error(ErrorCode::InvalidParameter, std::string(what) + " does not fit in u16");
  return static_cast<std::uint16_t>(v);
}

}  // namespace

std::vector<std::uint8_t> serialize_bank(const FilterBank& bank) {
  const QuantizerConfig& q = bank.quantizer;
  const std::size_t taps = static_cast<std::size_t>(bank.side) * bank.side;
  if (bank.bucket_count() != q.bucket_count() || bank.trained_mask.size() != bank.filters.size()) {
    throw Error(ErrorCode::ConfigMismatch, "bank slot count differs from quantizer bucket count");
  }
  ByteWriter out;
  out.raw("RDGL");
  out.u16(kBankVersion);
  out.u16(checked_u16(bank.side, "side"));
  out.u16(checked_u16(q.orientation_bins, "orientation_bins"));
  out.u16(checked_u16(q.strength_bins, "strength_bins"));
  out.u16(checked_u16(q.coherence_bins, "coherence_bins"));
  out.u16(checked_u16(static_cast<int>(q.strength_edges.size()), "strength edge count"));
  for (double e : q.strength_edges) out.f32(static_cast<float>(e));
  out.u16(checked_u16(static_cast<int>(q.coherence_edges.size()), "coherence edge count"));
  for (double e : q.coherence_edges) out.f32(static_cast<float>(e));
  for (const auto& filter : bank.filters) {
    if (filter.size() != taps) throw Error(ErrorCode::DimensionMismatch, "filter has wrong tap count");
    for (double c : filter) {
      if (!std::isfinite(c)) throw Error(ErrorCode::NonFiniteInput, "non-finite filter coefficient");
      out.f32(static_cast<float>(c));
    }
  }
  for (std::uint8_t m : bank.trained_mask) out.u8(m ? 1 : 0);
  return out.take();
}

FilterBank deserialize_bank(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "RDGL", 4) != 0) {
    throw Error(ErrorCode::BadBankFile, "missing RDGL magic");
  }
  ByteReader in(bytes.subspan(4));
  const std::uint16_t version = in.u16();
  if (version != kBankVersion) {
    throw Error(ErrorCode::BankVersionMismatch, "bank version " + std::to_string(version) + ", expected " +
                                                    std::to_string(kBankVersion));
  }
  FilterBank bank;
  bank.side = in.u16();
  QuantizerConfig& q = bank.quantizer;
  q.orientation_bins = in.u16();
  q.strength_bins = in.u16();
  q.coherence_bins = in.u16();
  q.strength_edges.resize(in.u16());
  for (double& e : q.strength_edges) e = in.f32();
  q.coherence_edges.resize(in.u16());
  for (double& e : q.coherence_edges) e = in.f32();
  try {
    q.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::BadBankFile, e.what());
  }
  if (bank.side < 3 || bank.side % 2 == 0) throw Error(ErrorCode::BadBankFile, "invalid filter side");

  const std::size_t taps = static_cast<std::size_t>(bank.side) * bank.side;
  const int k = q.bucket_count();
  bank.filters.assign(static_cast<std::size_t>(k), std::vector<double>(taps));
  for (auto& filter : bank.filters) {
    for (double& c : filter) c = in.f32();
  }
  bank.trained_mask.resize(static_cast<std::size_t>(k));
  for (auto& m : bank.trained_mask) m = in.u8();
  if (!in.at_end()) throw Error(ErrorCode::BadBankFile, "trailing bytes after trained mask");
  return bank;
}

void save_bank(const FilterBank& bank, const std::filesystem::path& path) {
  const auto bytes = serialize_bank(bank);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

FilterBank load_bank(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open bank " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_bank(bytes);
}

}  // namespace skyline
