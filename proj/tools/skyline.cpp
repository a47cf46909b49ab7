// Command-line front end: train, detect, baseline, eval, synth.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "skyline/error.hpp"
#include "skyline/image_io.hpp"
#include "skyline/pipeline.hpp"

namespace fs = std::filesystem;
using namespace skyline;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.overrides, "override one config key (key=value), repeatable");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
}

PipelineConfig resolve_config(const CommonOptions& o) {
  PipelineConfig config = o.config_path.empty() ? PipelineConfig{} : load_config(o.config_path);
  for (const auto& assignment : o.overrides) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::BadConfig, "--set expects key=value, got '" + assignment + "'");
    set_config_value(config, assignment.substr(0, eq), assignment.substr(eq + 1));
  }
  if (o.seed) config.seed = *o.seed;
  if (o.workers) config.workers = *o.workers;
  config.validate();
  return config;
}

// Images to process: a single file, or every image in a directory (sorted).
std::vector<fs::path> collect_inputs(const fs::path& input) {
  if (!fs::is_directory(input)) return {input};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(input)) {
    if (e.is_regular_file() && is_image_file(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error(ErrorCode::EmptyInput, "no images in " + input.string());
  return out;
}

struct Output {
  fs::path csv;
  fs::path overlay;
};

// With a directory input, --out and --overlay name directories of <stem>.csv / <stem>.png.
std::vector<Output> plan_outputs(const fs::path& input, const std::vector<fs::path>& images, const fs::path& out,
                                 const fs::path& overlay) {
  std::vector<Output> plan;
  const bool batch = fs::is_directory(input);
  if (batch) {
    fs::create_directories(out);
    if (!overlay.empty()) fs::create_directories(overlay);
  }
  for (const auto& img : images) {
    const std::string stem = img.stem().string();
    Output o;
    o.csv = batch ? out / (stem + ".csv") : out;
    if (!overlay.empty()) o.overlay = batch ? overlay / (stem + ".png") : overlay;
    plan.push_back(o);
  }
  return plan;
}

template <typename Run>
void run_images(const fs::path& input, const fs::path& out, const fs::path& overlay, int workers, Run run) {
  const auto images = collect_inputs(input);
  const auto plan = plan_outputs(input, images, out, overlay);
  std::vector<std::string> lines(images.size());
  parallel_for(images.size(), workers, [&](std::size_t i) {
    const RgbImage img = load_image(images[i]);
    DetectionResult result = run(img);
    write_ground_truth(plan[i].csv, result.path.rows);
    if (!plan[i].overlay.empty()) save_png(render_overlay(img, result.path), plan[i].overlay);
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s: cost %.6f  edges %.1f ms  tensor %.1f ms  predict %.1f ms  dp %.1f ms  total %.1f ms",
                  images[i].filename().string().c_str(), result.total_cost, result.timing.edges_ms,
                  result.timing.tensor_ms, result.timing.predict_ms, result.timing.dp_ms, result.timing.total_ms);
    lines[i] = buf;
  });
  for (const auto& line : lines) std::cout << line << "\n";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadConfig:
    case ErrorCode::UnknownMethod:
      return kExitUsage;
    case ErrorCode::Infeasible:
    case ErrorCode::SolveFailure:
      return kExitInternal;
    default:
      return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mountain skyline extraction with a learned filter bank and dynamic programming"};
  app.require_subcommand(1);

  // train
  CommonOptions train_opts;
  std::string train_dir;
  std::string train_out;
  auto* train = app.add_subcommand("train", "learn a filter bank from <dataset_dir> (images + <stem>.csv)");
  train->add_option("dataset_dir", train_dir)->required()->check(CLI::ExistingDirectory);
  train->add_option("--out", train_out, "output bank file")->required();
  add_common(train, train_opts);

  // detect
  CommonOptions detect_opts;
  std::string detect_in;
  std::string detect_bank;
  std::string detect_out;
  std::string detect_overlay;
  auto* detect_cmd = app.add_subcommand("detect", "extract the skyline of an image (or a directory of images)");
  detect_cmd->add_option("image", detect_in)->required()->check(CLI::ExistingPath);
  detect_cmd->add_option("--bank", detect_bank, "filter bank file")->required()->check(CLI::ExistingFile);
  detect_cmd->add_option("--out", detect_out, "output CSV (directory for batch input)")->required();
  detect_cmd->add_option("--overlay", detect_overlay, "optional overlay PNG (directory for batch input)");
  add_common(detect_cmd, detect_opts);

  // baseline
  CommonOptions base_opts;
  std::string base_in;
  std::string base_method;
  std::string base_out;
  std::string base_overlay;
  auto* base = app.add_subcommand("baseline", "run the edges-only or gradient baseline");
  base->add_option("image", base_in)->required()->check(CLI::ExistingPath);
  base->add_option("--method", base_method, "edges | gradient")->required();
  base->add_option("--out", base_out, "output CSV (directory for batch input)")->required();
  base->add_option("--overlay", base_overlay, "optional overlay PNG (directory for batch input)");
  add_common(base, base_opts);

  // eval
  std::string eval_pred;
  std::string eval_gt;
  std::string eval_out;
  auto* eval = app.add_subcommand("eval", "compare predicted CSVs against ground truth");
  eval->add_option("pred_dir", eval_pred)->required();
  eval->add_option("gt_dir", eval_gt)->required();
  eval->add_option("--out", eval_out, "JSON report path (default: <pred_dir>/report.json)");

  // synth
  SynthParams synth_params;
  int synth_size = -1;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate synthetic scenes with ground truth");
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--count", synth_params.count, "number of images")->capture_default_str();
  synth->add_option("--size", synth_size, "square image side (overrides --width/--height)");
  synth->add_option("--width", synth_params.width)->capture_default_str();
  synth->add_option("--height", synth_params.height)->capture_default_str();
  synth->add_option("--seed", synth_params.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) {
      const PipelineConfig config = resolve_config(train_opts);
      const Dataset dataset = load_dataset(train_dir);
      for (const auto& s : dataset.skipped) std::cerr << "skipped (no ground truth): " << s << "\n";
      const TrainResult result = train_bank(dataset, config);
      save_bank(result.bank, train_out);
      for (const auto& w : result.summary.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "images " << result.summary.images << ", samples " << result.summary.samples << "\n";
      std::cout << "bucket sample counts:\n";
      for (std::size_t b = 0; b < result.summary.bucket_counts.size(); ++b) {
        std::cout << "  " << b << ": " << result.summary.bucket_counts[b]
                  << (result.bank.trained_mask[b] ? "" : " (untrained)") << "\n";
      }
      std::cout << "trained buckets " << result.summary.trained_buckets << ", untrained buckets "
                << result.summary.untrained_buckets << "\n";
      std::cout << "wrote " << train_out << "\n";
    } else if (*detect_cmd) {
      const PipelineConfig config = resolve_config(detect_opts);
      const FilterBank bank = load_bank(detect_bank);
      PipelineConfig run_config = config;
      run_config.quantizer = bank.quantizer;
      run_config.blade.side = bank.side;
      run_images(detect_in, detect_out, detect_overlay, config.workers,
                 [&](const RgbImage& img) { return skyline::detect(bank, img, run_config); });
    } else if (*base) {
      const BaselineMethod method = parse_baseline_method(base_method);
      const PipelineConfig config = resolve_config(base_opts);
      run_images(base_in, base_out, base_overlay, config.workers,
                 [&](const RgbImage& img) { return run_baseline(method, img, config); });
    } else if (*eval) {
      const EvalReport report = evaluate_dirs(eval_pred, eval_gt);
      std::cout << report_table(report);
      const fs::path json_path = eval_out.empty() ? fs::path(eval_pred) / "report.json" : fs::path(eval_out);
      std::ofstream out(json_path);
      if (!out) throw Error(ErrorCode::IoError, "cannot write " + json_path.string());
      out << report_to_json(report).dump(2) << "\n";
      std::cout << "wrote " << json_path.string() << "\n";
    } else if (*synth) {
      if (synth_size > 0) synth_params.width = synth_params.height = synth_size;
      const SynthSummary summary = synth_generate(synth_params, synth_out);
      std::cout << "wrote " << summary.images.size() << " images and " << summary.ground_truths.size()
                << " ground-truth files to " << synth_out << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return 0;
}
