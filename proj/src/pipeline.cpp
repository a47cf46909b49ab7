#include "skyline/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "skyline/error.hpp"
#include "skyline/image_io.hpp"

namespace skyline {

namespace fs = std::filesystem;

// --- Configuration -----------------------------------------------------------

DpParams DpConfig::params_for(int rows) const {
  DpParams p;
  p.delta = delta;
  p.tog = tog;
  p.link_weight = link_weight.value_or(1.0 / static_cast<double>(std::max(rows, 1)));
  p.dummy_cost = dummy_cost;
  return p;
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::BadConfig, what); };
  if (!(canny.sigma > 0.0)) fail("canny.sigma must be > 0");
  if (!(canny.low > 0.0 && canny.low < canny.high && canny.high <= 1.0)) fail("need 0 < canny.low < canny.high <= 1");
  if (tensor.window < 3 || tensor.window % 2 == 0) fail("tensor.window must be odd and >= 3");
  if (!(tensor.weight_sigma > 0.0)) fail("tensor.weight_sigma must be > 0");
  try {
    quantizer.validate();
  } catch (const Error& e) {
    fail(e.what());
  }
  if (blade.side < 3 || blade.side % 2 == 0) fail("blade.side must be odd and >= 3");
  if (!(blade.lambda_smooth >= 0.0)) fail("blade.lambda_smooth must be >= 0");
  if (!(blade.lambda_ridge > 0.0)) fail("blade.lambda_ridge must be > 0");
  if (blade.exclusion_margin < 0) fail("blade.exclusion_margin must be >= 0");
  if (!(blade.positive_target >= 0.0 && blade.positive_target <= 1.0) ||
      !(blade.negative_target >= 0.0 && blade.negative_target <= 1.0) ||
      blade.positive_target == blade.negative_target) {
    fail("blade targets must be distinct values in [0,1]");
  }
  if (dp.delta < 1 || dp.tog < 1) fail("dp.delta and dp.tog must be >= 1");
  if (dp.link_weight && !(*dp.link_weight >= 0.0)) fail("dp.link_weight must be >= 0");
  if (!(dp.dummy_cost > 1.0) || !std::isfinite(dp.dummy_cost)) fail("dp.dummy_cost must exceed the max nodal cost 1");
  if (!(dp.v >= 0.0 && dp.v <= 1.0)) fail("dp.v must lie in [0,1]");
  if (!(dp.w1 >= 0.0 && dp.w1 <= 1.0)) fail("dp.w1 must lie in [0,1]");
  if (!(dp.l >= 0.0 && dp.l < dp.dummy_cost)) fail("dp.l must lie in [0, dummy_cost)");
  if (workers < 1) fail("workers must be >= 1");
}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) throw Error(ErrorCode::BadConfig, key + ": not a number: '" + value + "'");
  return v;
}

long long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) throw Error(ErrorCode::BadConfig, key + ": not an integer: '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "off" || value == "0" || value == "no") return false;
  throw Error(ErrorCode::BadConfig, key + ": not a boolean: '" + value + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

std::string join(const std::vector<double>& values) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? ", " : "") << values[i];
  return out.str();
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "canny.sigma",        "canny.low",          "canny.high",          "canny.mode",
      "tensor.window",      "tensor.weight_sigma", "tensor.orientation_bins", "tensor.strength_edges",
      "tensor.coherence_edges", "blade.side",     "blade.lambda_smooth", "blade.lambda_ridge",
      "blade.min_samples",  "blade.positive_target", "blade.negative_target", "blade.exclusion_margin",
      "blade.normalization", "dp.delta",          "dp.tog",              "dp.link_weight",
      "dp.dummy_cost",      "dp.v",               "dp.w1",               "dp.l",
      "dp.gap_fill",        "seed",               "workers"};
  return keys;
}

void set_config_value(PipelineConfig& c, const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "canny.sigma") c.canny.sigma = parse_double(key, value);
  else if (key == "canny.low") c.canny.low = parse_double(key, value);
  else if (key == "canny.high") c.canny.high = parse_double(key, value);
  else if (key == "canny.mode") {
    if (value == "relative") c.canny.mode = ThresholdMode::RelativeToMax;
    else if (value == "absolute") c.canny.mode = ThresholdMode::Absolute;
    else throw Error(ErrorCode::BadConfig, key + ": expected relative|absolute");
  }
  else if (key == "tensor.window") c.tensor.window = static_cast<int>(parse_int(key, value));
  else if (key == "tensor.weight_sigma") c.tensor.weight_sigma = parse_double(key, value);
  else if (key == "tensor.orientation_bins") c.quantizer.orientation_bins = static_cast<int>(parse_int(key, value));
  else if (key == "tensor.strength_edges") {
    c.quantizer.strength_edges = parse_list(key, value);
    c.quantizer.strength_bins = static_cast<int>(c.quantizer.strength_edges.size()) + 1;
  }
  else if (key == "tensor.coherence_edges") {
    c.quantizer.coherence_edges = parse_list(key, value);
    c.quantizer.coherence_bins = static_cast<int>(c.quantizer.coherence_edges.size()) + 1;
  }
  else if (key == "blade.side") c.blade.side = static_cast<int>(parse_int(key, value));
  else if (key == "blade.lambda_smooth") c.blade.lambda_smooth = parse_double(key, value);
  else if (key == "blade.lambda_ridge") c.blade.lambda_ridge = parse_double(key, value);
  else if (key == "blade.min_samples") {
    if (value == "auto") c.blade.min_samples.reset();
    else {
      const long long v = parse_int(key, value);
      if (v < 0) throw Error(ErrorCode::BadConfig, key + " must be >= 0");
      c.blade.min_samples = static_cast<std::size_t>(v);
    }
  }
  else if (key == "blade.positive_target") c.blade.positive_target = parse_double(key, value);
  else if (key == "blade.negative_target") c.blade.negative_target = parse_double(key, value);
  else if (key == "blade.exclusion_margin") c.blade.exclusion_margin = static_cast<int>(parse_int(key, value));
  else if (key == "blade.normalization") {
    if (value == "clamp") c.blade.normalization = ScoreNormalization::Clamp;
    else if (value == "minmax") c.blade.normalization = ScoreNormalization::MinMax;
    else throw Error(ErrorCode::BadConfig, key + ": expected clamp|minmax");
  }
  else if (key == "dp.delta") c.dp.delta = static_cast<int>(parse_int(key, value));
  else if (key == "dp.tog") c.dp.tog = static_cast<int>(parse_int(key, value));
  else if (key == "dp.link_weight") {
    if (value == "auto") c.dp.link_weight.reset();
    else c.dp.link_weight = parse_double(key, value);
  }
  else if (key == "dp.dummy_cost") c.dp.dummy_cost = parse_double(key, value);
  else if (key == "dp.v") c.dp.v = parse_double(key, value);
  else if (key == "dp.w1") c.dp.w1 = parse_double(key, value);
  else if (key == "dp.l") c.dp.l = parse_double(key, value);
  else if (key == "dp.gap_fill") c.dp.gap_fill = parse_bool(key, value);
  else if (key == "seed") {
    const long long v = parse_int(key, value);
    if (v < 0) throw Error(ErrorCode::BadConfig, "seed must be >= 0");
    c.seed = static_cast<std::uint64_t>(v);
  }
  else if (key == "workers") c.workers = static_cast<int>(parse_int(key, value));
  else throw Error(ErrorCode::BadConfig, "unknown config key '" + key + "'");
}

PipelineConfig parse_config(const std::string& text, PipelineConfig base) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::BadConfig, "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

PipelineConfig load_config(const fs::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), std::move(base));
}

std::string config_to_text(const PipelineConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "canny.sigma = " << c.canny.sigma << "\n"
      << "canny.low = " << c.canny.low << "\n"
      << "canny.high = " << c.canny.high << "\n"
      << "canny.mode = " << (c.canny.mode == ThresholdMode::RelativeToMax ? "relative" : "absolute") << "\n"
      << "tensor.window = " << c.tensor.window << "\n"
      << "tensor.weight_sigma = " << c.tensor.weight_sigma << "\n"
      << "tensor.orientation_bins = " << c.quantizer.orientation_bins << "\n"
      << "tensor.strength_edges = " << join(c.quantizer.strength_edges) << "\n"
      << "tensor.coherence_edges = " << join(c.quantizer.coherence_edges) << "\n"
      << "blade.side = " << c.blade.side << "\n"
      << "blade.lambda_smooth = " << c.blade.lambda_smooth << "\n"
      << "blade.lambda_ridge = " << c.blade.lambda_ridge << "\n"
      << "blade.min_samples = " << (c.blade.min_samples ? std::to_string(*c.blade.min_samples) : "auto") << "\n"
      << "blade.positive_target = " << c.blade.positive_target << "\n"
      << "blade.negative_target = " << c.blade.negative_target << "\n"
      << "blade.exclusion_margin = " << c.blade.exclusion_margin << "\n"
      << "blade.normalization = " << (c.blade.normalization == ScoreNormalization::Clamp ? "clamp" : "minmax") << "\n"
      << "dp.delta = " << c.dp.delta << "\n"
      << "dp.tog = " << c.dp.tog << "\n";
  if (c.dp.link_weight) {
    out << "dp.link_weight = " << *c.dp.link_weight << "\n";
  } else {
    out << "dp.link_weight = auto\n";
  }
  out << "dp.dummy_cost = " << c.dp.dummy_cost << "\n"
      << "dp.v = " << c.dp.v << "\n"
      << "dp.w1 = " << c.dp.w1 << "\n"
      << "dp.l = " << c.dp.l << "\n"
      << "dp.gap_fill = " << (c.dp.gap_fill ? "true" : "false") << "\n"
      << "seed = " << c.seed << "\n"
      << "workers = " << c.workers << "\n";
  return out.str();
}

// --- Workers -----------------------------------------------------------------

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(workers, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

// --- Training ----------------------------------------------------------------

QuantizerConfig storage_quantizer(const QuantizerConfig& q) {
  QuantizerConfig out = q;
  for (double& e : out.strength_edges) e = static_cast<float>(e);
  for (double& e : out.coherence_edges) e = static_cast<float>(e);
  return out;
}

namespace {

constexpr std::size_t kImagesPerShard = 8;

std::uint64_t image_seed(std::uint64_t seed, std::size_t index) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(index) + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

TrainResult train_bank(const Dataset& dataset, const PipelineConfig& config) {
  config.validate();
  if (dataset.entries.empty()) throw Error(ErrorCode::NoTrainingPairs, "dataset contains no image/ground-truth pairs");

  const QuantizerConfig quantizer = storage_quantizer(config.quantizer);
  const int k = quantizer.bucket_count();
  const std::size_t n = dataset.entries.size();
  const std::size_t shards = (n + kImagesPerShard - 1) / kImagesPerShard;

  std::vector<GramAccumulator> shard_acc(shards, GramAccumulator(config.blade.side, k));
  std::vector<std::vector<std::string>> shard_warnings(shards);
  std::vector<std::size_t> shard_samples(shards, 0);

  parallel_for(shards, config.workers, [&](std::size_t s) {
    const std::size_t begin = s * kImagesPerShard;
    const std::size_t end = std::min(n, begin + kImagesPerShard);
    for (std::size_t i = begin; i < end; ++i) {
      const DatasetEntry& entry = dataset.entries[i];
      const RgbImage img = load_image(entry.image_path);
      validate_ground_truth(entry.gt, img.width(), img.height(), entry.gt_path.filename().string());
      SamplingParams sp;
      sp.side = config.blade.side;
      sp.exclusion_margin = config.blade.exclusion_margin;
      sp.positive_target = config.blade.positive_target;
      sp.negative_target = config.blade.negative_target;
      sp.seed = image_seed(config.seed, i);
      const SampleSet set = collect_samples(img, entry.gt.rows, config.canny, config.tensor, quantizer, sp);
      for (const auto& w : set.warnings) shard_warnings[s].push_back(entry.stem + ": " + w);
      for (const auto& sample : set.samples) shard_acc[s].accumulate(sample);
      shard_samples[s] += set.samples.size();
    }
  });

  GramAccumulator acc(config.blade.side, k);
  TrainResult result;
  for (std::size_t s = 0; s < shards; ++s) {
    acc.merge(shard_acc[s]);
    result.summary.samples += shard_samples[s];
    for (auto& w : shard_warnings[s]) result.summary.warnings.push_back(std::move(w));
  }

  const Regularizer reg{config.blade.lambda_smooth, config.blade.lambda_ridge, true};
  result.bank = solve_bank(acc, reg, config.blade.resolved_min_samples(), quantizer);
  result.summary.images = n;
  result.summary.trained_buckets = result.bank.trained_count();
  result.summary.untrained_buckets = static_cast<std::size_t>(k) - result.summary.trained_buckets;
  for (int b = 0; b < k; ++b) result.summary.bucket_counts.push_back(acc.count(b));
  return result;
}

// --- Detection ---------------------------------------------------------------

namespace {

DetectionResult solve_grid(const CostGrid& raw_grid, const DpConfig& dp, bool use_gap_fill) {
  const DpParams params = dp.params_for(raw_grid.rows());
  const CostGrid grid = use_gap_fill ? gap_fill(raw_grid, params) : raw_grid;
  PathResult best = shortest_path(grid, params);
  DetectionResult out;
  out.total_cost = best.total_cost;
  out.column_costs.resize(best.path.rows.size());
  for (std::size_t j = 0; j < best.path.rows.size(); ++j) {
    out.column_costs[j] = grid.at(best.path.rows[j], static_cast<int>(j));
  }
  out.path = std::move(best.path);
  return out;
}

}  // namespace

DetectionResult detect(const FilterBank& bank, const RgbImage& img, const PipelineConfig& config) {
  config.validate();
  const auto start = Clock::now();

  auto t = Clock::now();
  const GrayImage gray = to_grayscale(img);
  const EdgeMap edges = canny(gray, config.canny);
  const double edges_ms = elapsed_ms(t);

  t = Clock::now();
  const FeatureField features = feature_field(tensor_field(img, config.tensor));
  const Plane strength = normalize01(features.strength_plane());
  const double tensor_ms = elapsed_ms(t);

  t = Clock::now();
  const ScoreMap scores = predict(bank, gray, features, edges, config.blade.normalization);
  const double predict_ms = elapsed_ms(t);

  t = Clock::now();
  const CostGrid grid = cost_proposed(scores, strength, edges, config.dp.v);
  DetectionResult result = solve_grid(grid, config.dp, config.dp.gap_fill);
  result.timing.dp_ms = elapsed_ms(t);

  result.timing.edges_ms = edges_ms;
  result.timing.tensor_ms = tensor_ms;
  result.timing.predict_ms = predict_ms;
  result.timing.total_ms = elapsed_ms(start);
  return result;
}

BaselineMethod parse_baseline_method(const std::string& name) {
  if (name == "edges") return BaselineMethod::EdgesOnly;
  if (name == "gradient") return BaselineMethod::Gradient;
  throw Error(ErrorCode::UnknownMethod, "unknown baseline '" + name + "' (expected edges|gradient)");
}

DetectionResult run_baseline(BaselineMethod method, const RgbImage& img, const PipelineConfig& config) {
  config.validate();
  const auto start = Clock::now();
  auto t = Clock::now();
  const GrayImage gray = to_grayscale(img);
  DetectionResult result;
  if (method == BaselineMethod::EdgesOnly) {
    const EdgeMap edges = canny(gray, config.canny);
    const double edges_ms = elapsed_ms(t);
    t = Clock::now();
    result = solve_grid(cost_edges_only(edges, config.dp.l), config.dp, config.dp.gap_fill);
    result.timing.edges_ms = edges_ms;
  } else {
    // Dense cost: every pixel is a node, gap filling has nothing to do.
    result = solve_grid(cost_gradient(gray, config.dp.w1), config.dp, false);
  }
  result.timing.dp_ms = elapsed_ms(t);
  result.timing.total_ms = elapsed_ms(start);
  return result;
}

RgbImage render_overlay(const RgbImage& img, const SkylinePath& path) {
  RgbImage out = img;
  const int cols = std::min<int>(img.width(), static_cast<int>(path.rows.size()));
  for (int x = 0; x < cols; ++x) {
    const int y = path.rows[x];
    if (y >= 0 && y < img.height()) out.set_rgb(x, y, {1.0, 0.0, 0.0});
  }
  return out;
}

// --- Evaluation --------------------------------------------------------------

EvalReport evaluate_dirs(const fs::path& pred_dir, const fs::path& gt_dir) {
  if (!fs::is_directory(pred_dir)) throw Error(ErrorCode::MissingDirectory, "not a directory: " + pred_dir.string());
  if (!fs::is_directory(gt_dir)) throw Error(ErrorCode::MissingDirectory, "not a directory: " + gt_dir.string());

  std::vector<fs::path> preds;
  for (const auto& entry : fs::directory_iterator(pred_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") preds.push_back(entry.path());
  }
  std::sort(preds.begin(), preds.end());

  std::vector<ImageError> per_image;
  for (const auto& pred_path : preds) {
    const std::string stem = pred_path.stem().string();
    const fs::path gt_path = gt_dir / (stem + ".csv");
    if (!fs::exists(gt_path)) continue;
    const GroundTruth pred = read_ground_truth(pred_path);
    const GroundTruth gt = read_ground_truth(gt_path);
    ImageError e{stem, average_absolute_error(pred.rows, gt.rows), std::nullopt};
    for (const char* ext : {".png", ".ppm", ".pgm"}) {
      const fs::path image_path = gt_dir / (stem + ext);
      if (!fs::exists(image_path)) continue;
      const int height = load_image(image_path).height();
      validate_ground_truth(gt, static_cast<int>(gt.rows.size()), height, gt_path.filename().string());
      validate_ground_truth(pred, static_cast<int>(pred.rows.size()), height, pred_path.filename().string());
      e.accuracy = segmentation_accuracy(pred.rows, gt.rows, height);
      break;
    }
    per_image.push_back(std::move(e));
  }
  if (per_image.empty()) throw Error(ErrorCode::NoMatchedPairs, "no prediction / ground-truth stems in common");
  return aggregate(std::move(per_image));
}

}  // namespace skyline
