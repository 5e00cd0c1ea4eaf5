// Serial reference vs OpenMP kernel for the per-dataset loss/gradient
// accumulation that dominates risk evaluation and training.
#include <benchmark/benchmark.h>

#include "dpu/kernels.hpp"
#include "dpu/rng.hpp"

namespace {

struct Fixture {
  dpu::FeatureMatrix x;
  dpu::LinearScorer model;
};

Fixture make(std::size_t rows, std::size_t dim) {
  dpu::Rng rng(42);
  std::vector<double> values(rows * dim);
  for (auto& v : values) v = rng.normal();
  std::vector<double> w(dim);
  for (auto& v : w) v = 0.3 * rng.normal();
  return {dpu::FeatureMatrix(dim, std::move(values)), dpu::LinearScorer(std::move(w), 0.1)};
}

void BM_Reference(benchmark::State& state) {
  const auto f = make(static_cast<std::size_t>(state.range(0)),
                      static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(dpu::reference::accumulate_moments(
        f.x, f.model, dpu::SurrogateLoss::Logistic, true));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Parallel(benchmark::State& state) {
  const auto f = make(static_cast<std::size_t>(state.range(0)),
                      static_cast<std::size_t>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dpu::accumulate_moments(f.x, f.model, dpu::SurrogateLoss::Logistic, true));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = dpu::max_threads();
}

void Shapes(benchmark::internal::Benchmark* b) {
  for (const long rows : {2'500L, 100'000L, 1'000'000L}) {
    for (const long dim : {2L, 15L}) b->Args({rows, dim});
  }
}

}  // namespace

BENCHMARK(BM_Reference)->Apply(Shapes)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Parallel)->Apply(Shapes)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
