#include <benchmark/benchmark.h>

#include "greenview/baseline.hpp"
#include "greenview/random.hpp"

using namespace greenview;

namespace {

// Street-scene stand-in: gray noise, sparse green specks, a few green blocks.
RasterImage scene(std::size_t w, std::size_t h) {
  SeededRng rng(7);
  std::vector<std::uint8_t> px(w * h * 3);
  for (std::size_t i = 0; i < w * h; ++i) {
    const auto v = static_cast<std::uint8_t>(90 + rng.below(80));
    px[3 * i] = px[3 * i + 1] = px[3 * i + 2] = v;
    if (rng.unit() < 0.03) px[3 * i + 1] = 220;
  }
  for (int block = 0; block < 4; ++block) {
    const auto x0 = rng.below(w / 2), y0 = rng.below(h / 2);
    for (std::size_t y = y0; y < y0 + h / 4; ++y)
      for (std::size_t x = x0; x < x0 + w / 4; ++x) {
        auto* p = &px[3 * (y * w + x)];
        p[0] = 40;
        p[1] = 160;
        p[2] = 50;
      }
  }
  return RasterImage("bench", w, h, std::move(px));
}

void BM_ThresholdGreen(benchmark::State& state) {
  const auto image = scene(state.range(0), state.range(0) * 3 / 4);
  const BaselineConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(threshold_green(image, cfg));
  state.SetItemsProcessed(state.iterations() * image.width() * image.height());
}
BENCHMARK(BM_ThresholdGreen)->Arg(320)->Arg(640);

void BM_FilterClusters(benchmark::State& state) {
  const auto image = scene(state.range(0), state.range(0) * 3 / 4);
  BaselineConfig cfg;
  cfg.connectivity = state.range(1) == 8 ? Connectivity::Eight : Connectivity::Four;
  const auto candidates = threshold_green(image, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(filter_clusters(candidates, cfg));
  state.SetItemsProcessed(state.iterations() * image.width() * image.height());
}
BENCHMARK(BM_FilterClusters)->Args({320, 4})->Args({640, 4})->Args({640, 8});

void BM_Segment(benchmark::State& state) {
  const auto image = scene(640, 480);
  const BaselineConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(segment(image, cfg));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Segment);

}  // namespace
