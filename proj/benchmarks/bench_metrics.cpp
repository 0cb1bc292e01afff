#include <benchmark/benchmark.h>

#include "chartattrib/metrics.hpp"
#include "chartattrib/verification.hpp"

using namespace chartattrib;

namespace {

BoxSet random_set(PortableGaussian& rng, Frame f, std::size_t n) {
  BoxSet s({}, f);
  for (std::size_t k = 0; k < n; ++k) {
    const auto x = static_cast<std::int64_t>(rng.uniform() * static_cast<double>(f.width));
    const auto y = static_cast<std::int64_t>(rng.uniform() * static_cast<double>(f.height));
    s.boxes.push_back({x, y, x + 50 + static_cast<std::int64_t>(rng.uniform() * 300),
                       y + 50 + static_cast<std::int64_t>(rng.uniform() * 300)});
  }
  return s;
}

void BM_MultiboxIou(benchmark::State& state) {
  PortableGaussian rng(3);
  const Frame f{state.range(0), state.range(0)};
  const BoxSet p = random_set(rng, f, 8), g = random_set(rng, f, 8);
  for (auto _ : state) benchmark::DoNotOptimize(multibox_iou(p, g));
}
BENCHMARK(BM_MultiboxIou)->Arg(700)->Arg(2000)->Unit(benchmark::kMicrosecond);

void BM_ExactMultiboxIou(benchmark::State& state) {
  PortableGaussian rng(3);
  const Frame f{2000, 2000};
  const BoxSet p = random_set(rng, f, 8), g = random_set(rng, f, 8);
  for (auto _ : state) benchmark::DoNotOptimize(exact_multibox_iou(p, g));
}
BENCHMARK(BM_ExactMultiboxIou)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
