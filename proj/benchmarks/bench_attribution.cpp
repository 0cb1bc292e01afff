#include <benchmark/benchmark.h>

#include "chartattrib/attribution.hpp"
#include "chartattrib/verification.hpp"

using namespace chartattrib;

namespace {

EmbeddingGrid make_grid(std::size_t side, std::size_t dim, std::uint64_t seed) {
  PortableGaussian rng(seed);
  std::vector<float> v(side * side * dim);
  for (auto& x : v) x = static_cast<float>(rng.next());
  return EmbeddingGrid(side, side, dim, std::move(v));
}

QueryEmbedding make_query(std::size_t dim, std::uint64_t seed) {
  PortableGaussian rng(seed);
  QueryEmbedding q;
  q.values.resize(dim);
  for (auto& x : q.values) x = static_cast<float>(rng.next());
  return q;
}

// Full pipeline: normalization, integral build and the default square scan.
void BM_AttributeBest(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  const EmbeddingGrid g = make_grid(35, dim, 1);
  const QueryEmbedding q = make_query(dim, 2);
  for (auto _ : state) benchmark::DoNotOptimize(attribute_best(g, q, WindowConfig{}));
}
BENCHMARK(BM_AttributeBest)->Arg(64)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_BuildIntegral(benchmark::State& state) {
  const EmbeddingGrid g = make_grid(35, 4096, 1);
  for (auto _ : state) benchmark::DoNotOptimize(build_integral(normalize_grid(g)));
}
BENCHMARK(BM_BuildIntegral)->Unit(benchmark::kMillisecond);

// Scan only, scorer built once and reused across queries.
void BM_ScanPrepared(benchmark::State& state) {
  const EmbeddingGrid g = make_grid(35, 4096, 1);
  const QueryEmbedding q = make_query(4096, 2);
  const WindowScorer scorer(g, WindowConfig{}, ScanOptions{static_cast<unsigned>(state.range(0))});
  for (auto _ : state) benchmark::DoNotOptimize(scorer.best(q));
}
BENCHMARK(BM_ScanPrepared)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_TopK(benchmark::State& state) {
  const EmbeddingGrid g = make_grid(35, 4096, 1);
  const QueryEmbedding q = make_query(4096, 2);
  const WindowScorer scorer(g, WindowConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(scorer.topk(q, 5, 0.3));
}
BENCHMARK(BM_TopK)->Unit(benchmark::kMillisecond);

void BM_BruteForce(benchmark::State& state) {
  const EmbeddingGrid g = make_grid(20, 256, 1);
  const QueryEmbedding q = make_query(256, 2);
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_attribute(g, q, WindowConfig{}));
}
BENCHMARK(BM_BruteForce)->Unit(benchmark::kMillisecond);

}  // namespace
