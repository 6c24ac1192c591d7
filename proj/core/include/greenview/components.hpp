#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "greenview/imaging.hpp"

namespace greenview {

enum class Connectivity { Four = 4, Eight = 8 };

/// Result of labeling the true pixels of a mask. Background pixels carry
/// label 0; components are numbered 1..component_count() in raster order of
/// their first pixel, so the labeling is deterministic.
struct ComponentLabels {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint32_t> labels;
  std::vector<std::size_t> areas;  // areas[k - 1] is the area of component k

  std::size_t component_count() const noexcept { return areas.size(); }
};

/// Two-pass union-find labeling.
ComponentLabels label_components(const VegetationMask& mask, Connectivity connectivity);

}  // namespace greenview
