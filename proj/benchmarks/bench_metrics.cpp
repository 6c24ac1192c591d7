#include <benchmark/benchmark.h>

#include "greenview/metrics.hpp"
#include "greenview/random.hpp"

using namespace greenview;

namespace {

std::vector<PairedSample> samples(std::size_t n, bool with_masks) {
  SeededRng rng(3);
  std::vector<PairedSample> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].id = "s" + std::to_string(i);
    out[i].predicted_gvi = 100.0 * rng.unit();
    out[i].true_gvi = 100.0 * rng.unit();
    if (with_masks) {
      std::vector<std::uint8_t> a(64 * 48), b(64 * 48);
      for (std::size_t k = 0; k < a.size(); ++k) {
        a[k] = rng.below(2);
        b[k] = rng.below(2);
      }
      out[i].predicted_mask = VegetationMask(64, 48, std::move(a));
      out[i].true_mask = VegetationMask(64, 48, std::move(b));
    }
  }
  return out;
}

void BM_Evaluate(benchmark::State& state) {
  const auto s = samples(state.range(0), state.range(1) != 0);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Evaluate)->Args({1000, 0})->Args({100000, 0})->Args({1000, 1});

void BM_ErrorBounds(benchmark::State& state) {
  const auto s = samples(state.range(0), false);
  for (auto _ : state) benchmark::DoNotOptimize(error_bounds(s));
}
BENCHMARK(BM_ErrorBounds)->Arg(1000)->Arg(100000);

}  // namespace
