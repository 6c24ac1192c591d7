#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "greenview/imaging.hpp"

namespace greenview {

/// One estimator output paired with its manual label. GVI values in percent.
struct PairedSample {
  std::string id;
  double predicted_gvi = 0.0;
  double true_gvi = 0.0;
  std::optional<VegetationMask> predicted_mask;
  std::optional<VegetationMask> true_mask;
};

struct ErrorBounds {
  double lo = 0.0;
  double hi = 0.0;
};

/// Accuracy summary with the same columns as the published comparison table.
/// Percent quantities are in percentage points.
struct EvaluationReport {
  std::optional<double> mean_iou;
  double mae = 0.0;
  std::optional<double> pearson_r;
  double err_lo = 0.0;
  double err_hi = 0.0;
  double quantile_lo = 0.05;
  double quantile_hi = 0.95;
  std::size_t n = 0;
  std::optional<double> running_time_s_per_10k;
  std::string split;              // subset the report was computed on
  std::string iou_mode = "per_image";

  friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

/// |pred AND truth| / |pred OR truth|; two all-false masks score 1.
double iou(const VegetationMask& predicted, const VegetationMask& truth);

/// 100 * mean over samples of iou(predicted_mask, true_mask).
double mean_iou(std::span<const PairedSample> samples);

/// 100 * total intersection / total union over the whole set.
double pooled_iou(std::span<const PairedSample> samples);

double mae(std::span<const PairedSample> samples);

double pearson_r(std::span<const PairedSample> samples);

/// Linear-interpolation ("type 7") quantile of an ascending-sorted sample.
double quantile_sorted(std::span<const double> sorted, double q);

/// Quantiles of the signed errors predicted - true.
ErrorBounds error_bounds(std::span<const PairedSample> samples, double lo = 0.05,
                         double hi = 0.95);

struct EvaluateOptions {
  double quantile_lo = 0.05;
  double quantile_hi = 0.95;
  bool pooled_iou = false;
  std::optional<double> running_time_s_per_10k;
  std::string split = "all";
};

/// Assembles every metric. mean_iou is absent when any sample lacks a mask;
/// pearson_r is absent when it is undefined (fewer than two samples or a
/// constant series). Samples are processed in id order.
EvaluationReport evaluate(std::span<const PairedSample> samples, const EvaluateOptions& options = {});

}  // namespace greenview
