#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "greenview/baseline.hpp"
#include "greenview/dataset.hpp"
#include "greenview/inference.hpp"
#include "greenview/metrics.hpp"

namespace greenview::cli {

enum class BackendType { Baseline, MaskDir, Model };

struct BackendSpec {
  BackendType type = BackendType::Baseline;
  std::filesystem::path mask_dir;
  std::filesystem::path model;
  ModelKind model_kind = ModelKind::Segmentation;
};

/// Everything a pipeline command needs besides its own inputs and outputs.
struct PipelineConfig {
  BaselineConfig baseline;
  BackendSpec backend;
  std::size_t workers = 1;
  std::filesystem::path cache_dir = ".greenview-cache";
  double quantile_lo = 0.05;
  double quantile_hi = 0.95;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument when workers is 0 or the quantiles are invalid.
  void validate() const;
};

std::shared_ptr<const Estimator> open_backend(const PipelineConfig& config);

/// Writes <out_dir>/<id>.png for every entry. Masks written before a
/// cancellation are removed again.
void cmd_segment(const SampleManifest& manifest, const PipelineConfig& config,
                 const std::filesystem::path& out_dir, std::stop_token stop = {});

/// Writes per-image GVI to out_csv (id,point_id,city,gvi,source) plus
/// <stem>_points.csv and <stem>_cities.csv aggregates next to it.
void cmd_gvi(const SampleManifest& manifest, const PipelineConfig& config,
             const std::filesystem::path& out_csv, bool pool_pixels = false,
             std::stop_token stop = {});

struct EvaluateCommandOptions {
  std::optional<Split> split;
  bool pooled_iou = false;
  /// Adds measured backend time to the report. Off by default because
  /// timings would make reruns differ.
  bool timing = false;
  std::string model_name;
};

/// Writes the report as JSON to out_report and as a plain-text table to the
/// same path with a .txt extension.
EvaluationReport cmd_evaluate(const SampleManifest& manifest, const PipelineConfig& config,
                              const std::filesystem::path& out_report,
                              const EvaluateCommandOptions& options = {},
                              std::stop_token stop = {});

struct BenchmarkReport {
  std::string backend;
  std::size_t images = 0;
  std::size_t workers = 1;
  std::vector<double> run_seconds;
  double median_seconds = 0.0;
  double images_per_second = 0.0;
  double seconds_per_10k_images = 0.0;
  double hours_per_1m_images = 0.0;

  nlohmann::json to_json() const;
  /// Human-readable summary with published reference timings in the footer.
  std::string to_text() const;
};

/// Times decode + estimation over the whole manifest `repeats` times and
/// reports the median.
BenchmarkReport cmd_benchmark(const SampleManifest& manifest, const PipelineConfig& config,
                              std::size_t repeats = 3, std::stop_token stop = {});

}  // namespace greenview::cli
