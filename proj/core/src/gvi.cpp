#include "greenview/gvi.hpp"

#include <algorithm>
#include <vector>

#include "greenview/error.hpp"

namespace greenview {

std::string_view to_string(Scope scope) noexcept {
  switch (scope) {
    case Scope::Image: return "image";
    case Scope::Point: return "point";
    case Scope::City: return "city";
  }
  return "unknown";
}

std::string_view to_string(Source source) noexcept {
  switch (source) {
    case Source::Baseline: return "baseline";
    case Source::MaskBackend: return "mask_backend";
    case Source::DirectEstimate: return "direct_estimate";
    case Source::ManualLabel: return "manual_label";
  }
  return "unknown";
}

Source parse_source(std::string_view text) {
  for (auto s : {Source::Baseline, Source::MaskBackend, Source::DirectEstimate,
                 Source::ManualLabel})
    if (to_string(s) == text) return s;
  throw Error(ErrorCode::InvalidArgument, "unknown source '" + std::string(text) + "'");
}

GviMeasurement::GviMeasurement(std::string id, double value, Scope scope, std::size_t n_images,
                               Source source, std::optional<PixelTally> pixels)
    : id_(std::move(id)),
      value_(value),
      scope_(scope),
      n_images_(n_images),
      source_(source),
      pixels_(pixels) {
  if (!(value_ >= 0.0 && value_ <= 100.0))
    throw Error(ErrorCode::InvalidArgument, "GVI must lie in [0, 100]");
  if (n_images_ < 1) throw Error(ErrorCode::InvalidArgument, "n_images must be >= 1");
}

GviMeasurement gvi_of_mask(const VegetationMask& mask, Source source, std::string id) {
  const std::size_t total = mask.pixel_count();
  if (total == 0) throw Error(ErrorCode::EmptyMask, "mask has no pixels");
  const std::size_t vegetation = mask.vegetation_pixel_count();
  const double value = 100.0 * static_cast<double>(vegetation) / static_cast<double>(total);
  return GviMeasurement(std::move(id), value, Scope::Image, 1, source,
                        PixelTally{vegetation, total});
}

namespace {

Scope finer_scope(Scope scope) {
  switch (scope) {
    case Scope::Point: return Scope::Image;
    case Scope::City: return Scope::Point;
    case Scope::Image: break;
  }
  throw Error(ErrorCode::MixedScope, "cannot aggregate to image scope");
}

// Inputs sorted by id (then value) so every reduction runs in one fixed order.
std::vector<const GviMeasurement*> checked_sorted(std::span<const GviMeasurement> measurements,
                                                  Scope scope) {
  if (measurements.empty()) throw Error(ErrorCode::EmptyAggregate, "nothing to aggregate");
  const Scope expected = finer_scope(scope);
  std::vector<const GviMeasurement*> sorted;
  sorted.reserve(measurements.size());
  for (const auto& m : measurements) {
    if (m.scope() != expected)
      throw Error(ErrorCode::MixedScope, "expected " + std::string(to_string(expected)) +
                                             " measurements, got " +
                                             std::string(to_string(m.scope())));
    sorted.push_back(&m);
  }
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    if (a->id() != b->id()) return a->id() < b->id();
    return a->value() < b->value();
  });
  return sorted;
}

}  // namespace

GviMeasurement aggregate(std::span<const GviMeasurement> measurements, Scope scope,
                         std::string id) {
  const auto sorted = checked_sorted(measurements, scope);
  double sum = 0.0;
  std::size_t n_images = 0;
  double lo = sorted.front()->value();
  double hi = lo;
  for (const auto* m : sorted) {
    sum += m->value();
    n_images += m->n_images();
    lo = std::min(lo, m->value());
    hi = std::max(hi, m->value());
  }
  // Rounding in the mean can step a hair outside the input range.
  const double mean = std::clamp(sum / static_cast<double>(sorted.size()), lo, hi);
  std::optional<PixelTally> pixels;
  if (std::all_of(sorted.begin(), sorted.end(), [](const auto* m) { return m->pixels(); })) {
    PixelTally t;
    for (const auto* m : sorted) {
      t.vegetation += m->pixels()->vegetation;
      t.total += m->pixels()->total;
    }
    pixels = t;
  }
  return GviMeasurement(std::move(id), mean, scope, n_images, sorted.front()->source(), pixels);
}

GviMeasurement aggregate_pooled(std::span<const GviMeasurement> measurements, Scope scope,
                                std::string id) {
  const auto sorted = checked_sorted(measurements, scope);
  PixelTally t;
  std::size_t n_images = 0;
  for (const auto* m : sorted) {
    if (!m->pixels())
      throw Error(ErrorCode::PoolingUnavailable,
                  "measurement '" + m->id() + "' carries no pixel counts");
    t.vegetation += m->pixels()->vegetation;
    t.total += m->pixels()->total;
    n_images += m->n_images();
  }
  if (t.total == 0) throw Error(ErrorCode::EmptyMask, "pooled pixel total is zero");
  const double value = 100.0 * static_cast<double>(t.vegetation) / static_cast<double>(t.total);
  return GviMeasurement(std::move(id), value, scope, n_images, sorted.front()->source(), t);
}

}  // namespace greenview
