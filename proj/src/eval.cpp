#include "skyline/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "skyline/error.hpp"
#include "skyline/image_io.hpp"

namespace skyline {

namespace fs = std::filesystem;

void validate_ground_truth(const GroundTruth& gt, int width, int height, const std::string& name) {
  if (static_cast<int>(gt.rows.size()) != width) {
    throw Error(ErrorCode::MalformedGroundTruth, name + ": " + std::to_string(gt.rows.size()) +
                                                     " columns, image width is " + std::to_string(width));
  }
  for (std::size_t j = 0; j < gt.rows.size(); ++j) {
    if (gt.rows[j] < 0 || gt.rows[j] >= height) {
      throw Error(ErrorCode::MalformedGroundTruth, name + ": row " + std::to_string(gt.rows[j]) + " at column " +
                                                       std::to_string(j) + " outside image height " +
                                                       std::to_string(height));
    }
  }
}

namespace {

long long total_abs_diff(std::span<const int> pred, std::span<const int> gt) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorCode::LengthMismatch, "path lengths differ: " + std::to_string(pred.size()) + " vs " +
                                               std::to_string(gt.size()));
  }
  if (pred.empty()) throw Error(ErrorCode::EmptyInput, "empty path");
  long long sum = 0;
  for (std::size_t j = 0; j < pred.size(); ++j) sum += std::llabs(static_cast<long long>(pred[j]) - gt[j]);
  return sum;
}

}  // namespace

double average_absolute_error(std::span<const int> pred, std::span<const int> gt) {
  const long long sum = total_abs_diff(pred, gt);
  return static_cast<double>(sum) / static_cast<double>(pred.size());
}

double average_absolute_error(const SkylinePath& pred, const GroundTruth& gt) {
  return average_absolute_error(pred.rows, gt.rows);
}

double segmentation_accuracy(std::span<const int> pred, std::span<const int> gt, int height) {
  const long long sum = total_abs_diff(pred, gt);
  for (std::size_t j = 0; j < pred.size(); ++j) {
    if (pred[j] < 0 || pred[j] >= height || gt[j] < 0 || gt[j] >= height) {
      throw Error(ErrorCode::InvalidParameter, "path row outside image height");
    }
  }
  // Column j mislabels exactly |pred(j) - gt(j)| pixels, so the accuracy is
  // 1 - A_err / height; computed that way to keep the identity bit-exact.
  const double a_err = static_cast<double>(sum) / static_cast<double>(pred.size());
  return 1.0 - a_err / static_cast<double>(height);
}

double segmentation_accuracy(const SkylinePath& pred, const GroundTruth& gt, int height) {
  return segmentation_accuracy(pred.rows, gt.rows, height);
}

Histogram error_histogram(std::span<const double> errors, double bin_width, double overflow_at) {
  if (!(bin_width > 0.0) || !(overflow_at > 0.0)) throw Error(ErrorCode::InvalidParameter, "bad histogram bins");
  Histogram hist;
  hist.bin_width = bin_width;
  hist.overflow_at = overflow_at;
  const auto regular = static_cast<std::size_t>(std::ceil(overflow_at / bin_width));
  hist.fractions.assign(regular + 1, 0.0);
  if (errors.empty()) return hist;
  for (double e : errors) {
    std::size_t bin = regular;
    if (e < overflow_at) bin = std::min(regular - 1, static_cast<std::size_t>(std::max(0.0, e) / bin_width));
    hist.fractions[bin] += 1.0;
  }
  for (double& f : hist.fractions) f /= static_cast<double>(errors.size());
  return hist;
}

EvalReport aggregate(std::vector<ImageError> per_image, double bin_width, double overflow_at) {
  if (per_image.empty()) throw Error(ErrorCode::EmptyInput, "aggregate of an empty error list");
  EvalReport report;
  std::vector<double> errors;
  errors.reserve(per_image.size());
  double acc_sum = 0.0;
  std::size_t acc_count = 0;
  for (const auto& e : per_image) {
    errors.push_back(e.error);
    if (e.accuracy) {
      acc_sum += *e.accuracy;
      ++acc_count;
    }
  }
  const double n = static_cast<double>(errors.size());
  double sum = 0.0;
  for (double e : errors) sum += e;
  report.mean = sum / n;
  double sq = 0.0;
  for (double e : errors) sq += (e - report.mean) * (e - report.mean);
  report.std = std::sqrt(sq / n);
  report.min = *std::min_element(errors.begin(), errors.end());
  report.max = *std::max_element(errors.begin(), errors.end());
  // Rounding in the mean must not break min <= mean <= max.
  report.mean = std::clamp(report.mean, report.min, report.max);
  if (acc_count > 0) report.mean_accuracy = acc_sum / static_cast<double>(acc_count);
  report.histogram = error_histogram(errors, bin_width, overflow_at);
  report.per_image = std::move(per_image);
  return report;
}

EvalReport aggregate(std::span<const double> errors, double bin_width, double overflow_at) {
  std::vector<ImageError> per_image;
  per_image.reserve(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) per_image.push_back({std::to_string(i), errors[i], std::nullopt});
  return aggregate(std::move(per_image), bin_width, overflow_at);
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["per_image"] = nlohmann::json::array();
  for (const auto& e : report.per_image) {
    nlohmann::json item{{"name", e.name}, {"a_err", e.error}};
    if (e.accuracy) item["accuracy"] = *e.accuracy;
    j["per_image"].push_back(item);
  }
  j["mean"] = report.mean;
  j["std"] = report.std;
  j["min"] = report.min;
  j["max"] = report.max;
  if (report.mean_accuracy) j["mean_accuracy"] = *report.mean_accuracy;
  j["histogram"] = {{"bin_width", report.histogram.bin_width},
                    {"overflow_at", report.histogram.overflow_at},
                    {"fractions", report.histogram.fractions}};
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport report;
  for (const auto& item : j.at("per_image")) {
    ImageError e{item.at("name").get<std::string>(), item.at("a_err").get<double>(), std::nullopt};
    if (item.contains("accuracy")) e.accuracy = item.at("accuracy").get<double>();
    report.per_image.push_back(e);
  }
  report.mean = j.at("mean").get<double>();
  report.std = j.at("std").get<double>();
  report.min = j.at("min").get<double>();
  report.max = j.at("max").get<double>();
  if (j.contains("mean_accuracy")) report.mean_accuracy = j.at("mean_accuracy").get<double>();
  const auto& h = j.at("histogram");
  report.histogram.bin_width = h.at("bin_width").get<double>();
  report.histogram.overflow_at = h.at("overflow_at").get<double>();
  report.histogram.fractions = h.at("fractions").get<std::vector<double>>();
  return report;
}

std::string report_table(const EvalReport& report, const std::string& title) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << title << "\n";
  out << std::left << std::setw(32) << "image" << std::right << std::setw(12) << "A_err";
  if (report.mean_accuracy) out << std::setw(12) << "accuracy";
  out << "\n";
  for (const auto& e : report.per_image) {
    out << std::left << std::setw(32) << e.name << std::right << std::setw(12) << e.error;
    if (e.accuracy) out << std::setw(12) << *e.accuracy;
    out << "\n";
  }
  out << "\n" << std::right << std::setw(12) << "mean" << std::setw(12) << "std" << std::setw(12) << "min"
      << std::setw(12) << "max" << "\n";
  out << std::setw(12) << report.mean << std::setw(12) << report.std << std::setw(12) << report.min << std::setw(12)
      << report.max << "\n";
  if (report.mean_accuracy) out << "mean segmentation accuracy: " << *report.mean_accuracy << "\n";
  out << "\nhistogram (fraction of images)\n";
  const auto& hist = report.histogram;
  for (std::size_t b = 0; b < hist.fractions.size(); ++b) {
    std::ostringstream label;
    label << std::fixed << std::setprecision(1);
    if (b + 1 == hist.fractions.size()) {
      label << ">= " << hist.overflow_at;
    } else {
      label << "[" << hist.lower_edge(b) << ", " << hist.lower_edge(b + 1) << ")";
    }
    out << "  " << std::left << std::setw(14) << label.str() << std::right << std::setw(8) << hist.fractions[b]
        << "\n";
  }
  return out.str();
}

GroundTruth read_ground_truth(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();

  GroundTruth gt;
  if (text.empty()) return gt;
  std::stringstream fields(text);
  std::string field;
  while (std::getline(fields, field, ',')) {
    const auto first = field.find_first_not_of(" \t\r\n");
    const auto last = field.find_last_not_of(" \t\r\n");
    if (first == std::string::npos) {
      throw Error(ErrorCode::MalformedGroundTruth, path.filename().string() + ": empty field");
    }
    const std::string token = field.substr(first, last - first + 1);
    char* end = nullptr;
    const long v = std::strtol(token.c_str(), &end, 10);
    if (end == token.c_str() || *end != '\0') {
      throw Error(ErrorCode::MalformedGroundTruth, path.filename().string() + ": non-integer field '" + token + "'");
    }
    gt.rows.push_back(static_cast<int>(v));
  }
  return gt;
}

void write_ground_truth(const fs::path& path, std::span<const int> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (j > 0) out << ',';
    out << rows[j];
  }
  out << '\n';
}

Dataset load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw Error(ErrorCode::MissingDirectory, "not a directory: " + root.string());
  std::map<std::string, fs::path> images;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) images[entry.path().stem().string()] = entry.path();
  }
  Dataset dataset;
  for (const auto& [stem, image_path] : images) {
    const fs::path gt_path = root / (stem + ".csv");
    if (!fs::exists(gt_path)) {
      dataset.skipped.push_back(image_path.filename().string());
      continue;
    }
    const RgbImage img = load_image(image_path);
    DatasetEntry e{stem, image_path, gt_path, read_ground_truth(gt_path), img.width(), img.height()};
    validate_ground_truth(e.gt, e.width, e.height, gt_path.filename().string());
    dataset.entries.push_back(std::move(e));
  }
  return dataset;
}

}  // namespace skyline
