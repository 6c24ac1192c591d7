#pragma once

#include <cstddef>

#include "greenview/components.hpp"
#include "greenview/imaging.hpp"

namespace greenview {

/// Parameters of the color-threshold-and-cluster baseline.
///
/// A pixel is a vegetation candidate iff
///   G > R + green_dominance_margin,
///   G > B + green_dominance_margin, and
///   2G - R - B > excess_green_threshold.
/// Candidate clusters smaller than min_cluster_area pixels are then removed.
struct BaselineConfig {
  int green_dominance_margin = 0;  // 0..255
  int excess_green_threshold = 10; // may be negative
  std::size_t min_cluster_area = 100;
  Connectivity connectivity = Connectivity::Four;

  /// Throws InvalidArgument when green_dominance_margin is outside 0..255.
  void validate() const;
};

VegetationMask threshold_green(const RasterImage& image, const BaselineConfig& config);

/// Clears every connected component whose area is below min_cluster_area.
VegetationMask filter_clusters(const VegetationMask& mask, const BaselineConfig& config);

/// filter_clusters(threshold_green(image)).
VegetationMask segment(const RasterImage& image, const BaselineConfig& config);

}  // namespace greenview
