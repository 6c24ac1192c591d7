#include "greenview/baseline.hpp"

#include <vector>

#include "greenview/error.hpp"

namespace greenview {

void BaselineConfig::validate() const {
  if (green_dominance_margin < 0 || green_dominance_margin > 255)
    throw Error(ErrorCode::InvalidArgument, "green_dominance_margin must be in 0..255");
}

VegetationMask threshold_green(const RasterImage& image, const BaselineConfig& config) {
  config.validate();
  const auto px = image.pixels();
  const int margin = config.green_dominance_margin;
  const int exg = config.excess_green_threshold;
  std::vector<std::uint8_t> bits(image.pixel_count());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const int r = px[3 * i];
    const int g = px[3 * i + 1];
    const int b = px[3 * i + 2];
    bits[i] = (g > r + margin && g > b + margin && 2 * g - r - b > exg) ? 1 : 0;
  }
  return VegetationMask(image.width(), image.height(), std::move(bits));
}

VegetationMask filter_clusters(const VegetationMask& mask, const BaselineConfig& config) {
  if (config.min_cluster_area == 0 || mask.vegetation_pixel_count() == 0) return mask;
  const auto components = label_components(mask, config.connectivity);
  std::vector<std::uint8_t> bits(mask.pixel_count(), 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const auto label = components.labels[i];
    if (label != 0 && components.areas[label - 1] >= config.min_cluster_area) bits[i] = 1;
  }
  return VegetationMask(mask.width(), mask.height(), std::move(bits));
}

VegetationMask segment(const RasterImage& image, const BaselineConfig& config) {
  return filter_clusters(threshold_green(image, config), config);
}

}  // namespace greenview
