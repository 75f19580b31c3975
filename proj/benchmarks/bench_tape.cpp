#include <benchmark/benchmark.h>

#include "phn/networks.hpp"
#include "phn/problems.hpp"
#include "phn/tape.hpp"

namespace {

using namespace phn;

void BM_HypernetForwardBackward(benchmark::State& state) {
  const int64_t width = state.range(0);
  const ToyProblem problem(100);
  HyperNetSpec hspec;
  hspec.preference_dim = 2;
  hspec.trunk_hidden = {width, width};
  const ParamLayout& target = problem.param_layout();
  const ParamVector theta = init_params(hypernet_layout(hspec, target), 1);
  const PreferenceVector r({0.4, 0.6});

  for (auto _ : state) {
    Tape tape;
    const std::vector<NodeId> leaves = insert_leaves(tape, theta);
    const std::vector<NodeId> phi = hypernet_forward(hspec, tape, leaves, r, target);
    const std::vector<NodeId> losses = problem.losses(tape, phi, {});
    tape.backward(losses[0]);
    benchmark::DoNotOptimize(tape.grad(leaves[0]).data.data());
  }
}
BENCHMARK(BM_HypernetForwardBackward)->Arg(25)->Arg(100);

void BM_TargetForward(benchmark::State& state) {
  const int64_t batch = state.range(0);
  TargetSpec spec;
  spec.input_dim = 16;
  spec.hidden = {40, 20};
  spec.head_dims = {2, 2};
  const ParamVector phi = init_params(target_layout(spec), 3);
  Rng rng(1);
  Tensor x = Tensor::zeros({batch, 16});
  for (double& v : x.data) v = rng.normal();

  for (auto _ : state) {
    Tape tape;
    const std::vector<NodeId> leaves = insert_leaves(tape, phi);
    const std::vector<NodeId> heads = target_forward(spec, tape, leaves, tape.leaf(x));
    benchmark::DoNotOptimize(tape.value(heads[0]).data.data());
  }
}
BENCHMARK(BM_TargetForward)->Arg(32)->Arg(256);

}  // namespace
