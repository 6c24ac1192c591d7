#include "greenview/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "greenview/error.hpp"

namespace greenview {

namespace {

struct Overlap {
  std::size_t intersection = 0;
  std::size_t union_ = 0;
};

Overlap overlap(const VegetationMask& a, const VegetationMask& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                    std::to_string(b.width()) + "x" + std::to_string(b.height()));
  const auto pa = a.bits();
  const auto pb = b.bits();
  Overlap o;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    o.intersection += pa[i] & pb[i];
    o.union_ += pa[i] | pb[i];
  }
  return o;
}

void require_nonempty(std::span<const PairedSample> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no samples");
}

void require_masks(const PairedSample& s) {
  if (!s.predicted_mask || !s.true_mask)
    throw Error(ErrorCode::MissingMask, "sample '" + s.id + "' lacks a mask");
}

std::vector<const PairedSample*> by_id(std::span<const PairedSample> samples) {
  std::vector<const PairedSample*> sorted;
  sorted.reserve(samples.size());
  for (const auto& s : samples) sorted.push_back(&s);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto* a, const auto* b) { return a->id < b->id; });
  return sorted;
}

}  // namespace

double iou(const VegetationMask& predicted, const VegetationMask& truth) {
  const auto o = overlap(predicted, truth);
  if (o.union_ == 0) return 1.0;
  return static_cast<double>(o.intersection) / static_cast<double>(o.union_);
}

double mean_iou(std::span<const PairedSample> samples) {
  require_nonempty(samples);
  double sum = 0.0;
  for (const auto* s : by_id(samples)) {
    require_masks(*s);
    sum += iou(*s->predicted_mask, *s->true_mask);
  }
  return 100.0 * sum / static_cast<double>(samples.size());
}

double pooled_iou(std::span<const PairedSample> samples) {
  require_nonempty(samples);
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (const auto& s : samples) {
    require_masks(s);
    const auto o = overlap(*s.predicted_mask, *s.true_mask);
    inter += o.intersection;
    uni += o.union_;
  }
  if (uni == 0) return 100.0;
  return 100.0 * static_cast<double>(inter) / static_cast<double>(uni);
}

double mae(std::span<const PairedSample> samples) {
  require_nonempty(samples);
  double sum = 0.0;
  for (const auto* s : by_id(samples)) sum += std::abs(s->predicted_gvi - s->true_gvi);
  return sum / static_cast<double>(samples.size());
}

double pearson_r(std::span<const PairedSample> samples) {
  require_nonempty(samples);
  if (samples.size() < 2) throw Error(ErrorCode::EmptyInput, "pearson_r needs at least 2 samples");
  const auto sorted = by_id(samples);
  const auto n = static_cast<double>(sorted.size());

  // Two-pass: center first, then accumulate co-moments.
  double mx = 0.0;
  double my = 0.0;
  for (const auto* s : sorted) {
    mx += s->predicted_gvi;
    my += s->true_gvi;
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (const auto* s : sorted) {
    const double dx = s->predicted_gvi - mx;
    const double dy = s->true_gvi - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw Error(ErrorCode::ZeroVariance, "a GVI series is constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw Error(ErrorCode::EmptyInput, "no values");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::InvalidQuantile, "quantile outside [0,1]");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(h));
  if (lower + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lower);
  return sorted[lower] + frac * (sorted[lower + 1] - sorted[lower]);
}

ErrorBounds error_bounds(std::span<const PairedSample> samples, double lo, double hi) {
  require_nonempty(samples);
  if (!(lo >= 0.0 && lo <= 1.0 && hi >= 0.0 && hi <= 1.0) || lo > hi)
    throw Error(ErrorCode::InvalidQuantile, "quantiles must satisfy 0 <= lo <= hi <= 1");
  std::vector<double> errors;
  errors.reserve(samples.size());
  for (const auto& s : samples) errors.push_back(s.predicted_gvi - s.true_gvi);
  std::sort(errors.begin(), errors.end());
  return {quantile_sorted(errors, lo), quantile_sorted(errors, hi)};
}

EvaluationReport evaluate(std::span<const PairedSample> samples, const EvaluateOptions& options) {
  require_nonempty(samples);
  EvaluationReport report;
  report.n = samples.size();
  report.split = options.split;
  report.quantile_lo = options.quantile_lo;
  report.quantile_hi = options.quantile_hi;
  report.iou_mode = options.pooled_iou ? "pooled" : "per_image";
  report.running_time_s_per_10k = options.running_time_s_per_10k;

  report.mae = mae(samples);
  const auto bounds = error_bounds(samples, options.quantile_lo, options.quantile_hi);
  report.err_lo = bounds.lo;
  report.err_hi = bounds.hi;

  const bool have_masks = std::all_of(samples.begin(), samples.end(), [](const auto& s) {
    return s.predicted_mask.has_value() && s.true_mask.has_value();
  });
  if (have_masks) report.mean_iou = options.pooled_iou ? pooled_iou(samples) : mean_iou(samples);

  if (samples.size() >= 2) {
    try {
      report.pearson_r = pearson_r(samples);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ZeroVariance) throw;
    }
  }
  return report;
}

}  // namespace greenview
