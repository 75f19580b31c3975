#include <benchmark/benchmark.h>

#include "phn/metrics.hpp"
#include "phn/rng.hpp"

namespace {

using namespace phn;

std::vector<LossVector> make_points(size_t n, size_t dims, uint64_t seed) {
  Rng rng(seed);
  std::vector<LossVector> points;
  for (size_t i = 0; i < n; ++i) {
    LossVector p(dims);
    for (double& v : p) v = rng.uniform();
    points.push_back(std::move(p));
  }
  return points;
}

void BM_Hypervolume(benchmark::State& state) {
  const size_t dims = static_cast<size_t>(state.range(0));
  const size_t n = static_cast<size_t>(state.range(1));
  const std::vector<LossVector> points = make_points(n, dims, 17);
  const ReferencePoint ref(dims, 1.2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hypervolume(points, ref));
  }
}
BENCHMARK(BM_Hypervolume)->Args({2, 25})->Args({3, 25})->Args({4, 25})->Args({5, 25});

void BM_HypervolumeMc(benchmark::State& state) {
  const std::vector<LossVector> points = make_points(25, 3, 19);
  const ReferencePoint ref(3, 1.2);
  Rng rng(23);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hypervolume_mc(points, ref, 10000, rng));
  }
}
BENCHMARK(BM_HypervolumeMc);

void BM_Uniformity(benchmark::State& state) {
  const PreferenceVector r({0.2, 0.3, 0.5});
  const LossVector losses = {0.4, 1.3, 0.9};
  for (auto _ : state) {
    benchmark::DoNotOptimize(uniformity(r, losses));
  }
}
BENCHMARK(BM_Uniformity);

}  // namespace
