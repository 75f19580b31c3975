#include <benchmark/benchmark.h>

#include "phn/moo.hpp"
#include "phn/rng.hpp"

namespace {

using namespace phn;

GradientSet make_gradients(size_t m, size_t n, uint64_t seed) {
  Rng rng(seed);
  GradientSet g(m, n);
  for (size_t i = 0; i < m; ++i) {
    for (double& v : g.row(i)) v = rng.normal();
  }
  return g;
}

void BM_MinNormWeights(benchmark::State& state) {
  const size_t m = static_cast<size_t>(state.range(0));
  const GradientSet g = make_gradients(m, 1000, 7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(min_norm_weights(g));
  }
}
BENCHMARK(BM_MinNormWeights)->Arg(2)->Arg(3)->Arg(5);

void BM_EpoWeights(benchmark::State& state) {
  const size_t m = static_cast<size_t>(state.range(0));
  const GradientSet g = make_gradients(m, 1000, 11);
  Rng rng(3);
  LossVector losses(m);
  for (double& v : losses) v = 0.2 + rng.uniform();
  const PreferenceVector r = sample_preference(m, 1.0, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(epo_weights(g, losses, r, 1e-3));
  }
}
BENCHMARK(BM_EpoWeights)->Arg(2)->Arg(3)->Arg(5);

void BM_SamplePreference(benchmark::State& state) {
  Rng rng(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_preference(3, 0.2, rng));
  }
}
BENCHMARK(BM_SamplePreference);

}  // namespace
