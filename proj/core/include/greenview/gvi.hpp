#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "greenview/imaging.hpp"

namespace greenview {

enum class Scope { Image, Point, City };
enum class Source { Baseline, MaskBackend, DirectEstimate, ManualLabel };

std::string_view to_string(Scope scope) noexcept;
std::string_view to_string(Source source) noexcept;
Source parse_source(std::string_view text);

/// Pixel tallies behind a mask-derived measurement, kept so that pooled
/// (pixel-weighted) aggregation stays possible.
struct PixelTally {
  std::size_t vegetation = 0;
  std::size_t total = 0;

  friend bool operator==(const PixelTally&, const PixelTally&) = default;
};

/// Green View Index in percent, together with the scope it describes and how
/// many images contributed to it.
class GviMeasurement {
 public:
  /// Throws InvalidArgument unless 0 <= value <= 100 and n_images >= 1.
  GviMeasurement(std::string id, double value, Scope scope, std::size_t n_images, Source source,
                 std::optional<PixelTally> pixels = std::nullopt);

  const std::string& id() const noexcept { return id_; }
  double value() const noexcept { return value_; }
  Scope scope() const noexcept { return scope_; }
  std::size_t n_images() const noexcept { return n_images_; }
  Source source() const noexcept { return source_; }
  const std::optional<PixelTally>& pixels() const noexcept { return pixels_; }

  friend bool operator==(const GviMeasurement&, const GviMeasurement&) = default;

 private:
  std::string id_;
  double value_;
  Scope scope_;
  std::size_t n_images_;
  Source source_;
  std::optional<PixelTally> pixels_;
};

/// 100 * vegetation pixels / total pixels, at image scope.
GviMeasurement gvi_of_mask(const VegetationMask& mask, Source source = Source::MaskBackend,
                           std::string id = {});

/// Unweighted mean of measurements one scope finer than `scope` (images for a
/// point, points for a city). Inputs are reduced in id order so the result
/// does not depend on their arrangement.
GviMeasurement aggregate(std::span<const GviMeasurement> measurements, Scope scope,
                         std::string id = {});

/// Pixel-pooled alternative: total vegetation pixels over total pixels. Needs
/// pixel tallies on every input (PoolingUnavailable otherwise).
GviMeasurement aggregate_pooled(std::span<const GviMeasurement> measurements, Scope scope,
                                std::string id = {});

}  // namespace greenview
