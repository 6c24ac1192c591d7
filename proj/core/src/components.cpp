#include "greenview/components.hpp"

#include <numeric>

namespace greenview {

namespace {

class DisjointSets {
 public:
  std::uint32_t make_set() {
    const auto id = static_cast<std::uint32_t>(parent_.size());
    parent_.push_back(id);
    return id;
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];  // path halving
      x = parent_[x];
    }
    return x;
  }

  // The smaller root always wins so provisional label order is preserved.
  void join(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b)
      parent_[b] = a;
    else
      parent_[a] = b;
  }

  std::size_t size() const noexcept { return parent_.size(); }

 private:
  std::vector<std::uint32_t> parent_;
};

constexpr std::uint32_t kNone = 0xFFFFFFFFu;

}  // namespace

ComponentLabels label_components(const VegetationMask& mask, Connectivity connectivity) {
  const std::size_t w = mask.width();
  const std::size_t h = mask.height();
  const auto bits = mask.bits();
  const bool diagonal = connectivity == Connectivity::Eight;

  std::vector<std::uint32_t> provisional(w * h, kNone);
  DisjointSets sets;

  // First pass: provisional labels from the already-visited neighbors
  // (west, north, and for 8-connectivity north-west and north-east).
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      if (!bits[i]) continue;

      std::uint32_t label = kNone;
      auto merge = [&](std::size_t j) {
        const auto other = provisional[j];
        if (other == kNone) return;
        if (label == kNone)
          label = other;
        else
          sets.join(label, other);
      };

      if (x > 0) merge(i - 1);
      if (y > 0) {
        merge(i - w);
        if (diagonal) {
          if (x > 0) merge(i - w - 1);
          if (x + 1 < w) merge(i - w + 1);
        }
      }
      provisional[i] = label == kNone ? sets.make_set() : label;
    }
  }

  // Resolve every root to a compact label in order of first appearance.
  std::vector<std::uint32_t> compact(sets.size(), 0);
  ComponentLabels out;
  out.width = w;
  out.height = h;
  out.labels.assign(w * h, 0);
  for (std::size_t i = 0; i < provisional.size(); ++i) {
    if (provisional[i] == kNone) continue;
    const auto root = sets.find(provisional[i]);
    if (compact[root] == 0) {
      out.areas.push_back(0);
      compact[root] = static_cast<std::uint32_t>(out.areas.size());
    }
    const auto label = compact[root];
    out.labels[i] = label;
    ++out.areas[label - 1];
  }
  return out;
}

}  // namespace greenview
