#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "phn/checkpoint.hpp"
#include "phn/errors.hpp"
#include "phn/finite_diff.hpp"
#include "phn/networks.hpp"

using namespace phn;

TEST_SUITE_BEGIN("networks");

TEST_CASE("target layout covers all tensors contiguously") {
  TargetSpec spec;
  spec.input_dim = 3;
  spec.hidden = {5, 4};
  spec.head_dims = {2, 2};
  const ParamLayout layout = target_layout(spec);
  CHECK(layout.entries().size() == 8);  // 2 hidden layers + 2 heads, w+b each
  size_t expected_offset = 0;
  for (const auto& e : layout.entries()) {
    CHECK(e.offset == expected_offset);
    expected_offset += e.size();
  }
  CHECK(layout.total_size() == expected_offset);
  CHECK(layout.total_size() == (3 * 5 + 5) + (5 * 4 + 4) + 2 * (4 * 2 + 2));
}

TEST_CASE("one-layer linear target with identity weights is the identity") {
  TargetSpec spec;
  spec.input_dim = 2;
  spec.head_dims = {2};
  ParamVector phi = ParamVector::zeros(target_layout(spec));
  auto w = phi.tensor_span(0);
  w[0] = 1.0;  // identity matrix, zero bias
  w[3] = 1.0;

  Tape tape;
  const std::vector<NodeId> leaves = insert_leaves(tape, phi);
  const std::vector<NodeId> heads =
      target_forward(spec, tape, leaves, tape.leaf(Tensor({1, 2}, {1, 2})));
  CHECK(tape.value(heads[0]).data == std::vector<double>{1, 2});
}

TEST_CASE("all-zero parameters give zero logits regardless of input") {
  TargetSpec spec;
  spec.input_dim = 3;
  spec.hidden = {4};
  spec.head_dims = {2, 1};
  const ParamVector phi = ParamVector::zeros(target_layout(spec));
  Tape tape;
  const std::vector<NodeId> leaves = insert_leaves(tape, phi);
  const std::vector<NodeId> heads =
      target_forward(spec, tape, leaves, tape.leaf(Tensor({2, 3}, {1, -2, 3, 4, 5, -6})));
  for (NodeId head : heads) {
    for (double v : tape.value(head).data) CHECK(v == 0.0);
  }
}

TEST_CASE("target forward is deterministic") {
  TargetSpec spec;
  spec.input_dim = 4;
  spec.hidden = {6};
  spec.head_dims = {3};
  const ParamVector phi = init_params(target_layout(spec), 5);
  Tensor x = Tensor::zeros({3, 4});
  Rng rng(2);
  for (double& v : x.data) v = rng.normal();

  auto run = [&] {
    Tape tape;
    const std::vector<NodeId> leaves = insert_leaves(tape, phi);
    return tape.value(target_forward(spec, tape, leaves, tape.leaf(x))[0]).data;
  };
  const std::vector<double> a = run(), b = run();
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("target forward reports layout mismatches") {
  TargetSpec spec;
  spec.input_dim = 2;
  spec.head_dims = {2};
  TargetSpec other = spec;
  other.head_dims = {3};
  const ParamVector phi = init_params(target_layout(other), 1);
  Tape tape;
  const std::vector<NodeId> leaves = insert_leaves(tape, phi);
  try {
    target_forward(spec, tape, leaves, tape.leaf(Tensor::zeros({1, 2})));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("head0.w") != std::string::npos);
    CHECK(msg.find("[2, 2]") != std::string::npos);  // expected
    CHECK(msg.find("[2, 3]") != std::string::npos);  // actual
  }
}

TEST_CASE("hypernet output matches the target parameter count") {
  TargetSpec tspec;
  tspec.input_dim = 3;
  tspec.hidden = {4};
  tspec.head_dims = {2, 2};
  const ParamLayout target = target_layout(tspec);

  HyperNetSpec hspec;
  hspec.preference_dim = 2;
  hspec.trunk_hidden = {10, 10};
  const ParamLayout hyper = hypernet_layout(hspec, target);

  // head output sizes sum to the target parameter count
  size_t head_total = 0;
  for (const auto& e : hyper.entries()) {
    if (e.name.rfind("head", 0) == 0 && e.shape.size() == 2) head_total += size_t(e.shape[1]);
  }
  CHECK(head_total == target.total_size());

  const ParamVector theta = init_params(hyper, 3);
  const ParamVector phi = eval_phi(hspec, theta, PreferenceVector({0.3, 0.7}), target);
  CHECK(phi.data.size() == target.total_size());
}

TEST_CASE("hypernet forward is deterministic in (theta, r)") {
  TargetSpec tspec;
  tspec.input_dim = 2;
  tspec.head_dims = {2};
  const ParamLayout target = target_layout(tspec);
  HyperNetSpec hspec;
  hspec.preference_dim = 2;
  hspec.trunk_hidden = {8};
  const ParamVector theta = init_params(hypernet_layout(hspec, target), 11);
  const PreferenceVector r({0.6, 0.4});
  const ParamVector a = eval_phi(hspec, theta, r, target);
  const ParamVector b = eval_phi(hspec, theta, r, target);
  CHECK(std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0);
}

TEST_CASE("generated parameters vary continuously with the preference") {
  TargetSpec tspec;
  tspec.input_dim = 3;
  tspec.hidden = {5};
  tspec.head_dims = {2};
  const ParamLayout target = target_layout(tspec);
  HyperNetSpec hspec;
  hspec.preference_dim = 2;
  hspec.trunk_hidden = {16, 16};
  const ParamVector theta = init_params(hypernet_layout(hspec, target), 21);

  const PreferenceVector base({0.4, 0.6});
  const ParamVector phi0 = eval_phi(hspec, theta, base, target);
  std::vector<double> norms;
  for (double delta : {1e-2, 1e-3, 1e-4}) {
    const PreferenceVector shifted({0.4 + delta, 0.6 - delta});
    const ParamVector phi1 = eval_phi(hspec, theta, shifted, target);
    double acc = 0.0;
    for (size_t i = 0; i < phi0.data.size(); ++i) {
      const double d = phi1.data[i] - phi0.data[i];
      acc += d * d;
    }
    norms.push_back(std::sqrt(acc));
  }
  // shrinking perturbations shrink the output; the ratio tracks the step
  // scaling of a locally smooth map
  CHECK(norms[0] > norms[1]);
  CHECK(norms[1] > norms[2]);
  CHECK(norms[2] > 0.0);
  const double ratio1 = norms[1] / norms[0];
  const double ratio2 = norms[2] / norms[1];
  CHECK(ratio1 == doctest::Approx(0.1).epsilon(0.5));
  CHECK(ratio2 == doctest::Approx(0.1).epsilon(0.5));
}

TEST_CASE("init_params is deterministic, seed-sensitive, and glorot-bounded") {
  TargetSpec spec;
  spec.input_dim = 6;
  spec.hidden = {7};
  spec.head_dims = {3};
  const ParamLayout layout = target_layout(spec);

  const ParamVector a = init_params(layout, 42);
  const ParamVector b = init_params(layout, 42);
  const ParamVector c = init_params(layout, 43);
  CHECK(a.data == b.data);
  CHECK(a.data != c.data);

  for (size_t e = 0; e < layout.entries().size(); ++e) {
    const auto& entry = layout.entries()[e];
    const double fan_in = double(entry.shape[0]);
    const double fan_out = entry.shape.size() > 1 ? double(entry.shape[1]) : 1.0;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double v : a.tensor_span(e)) {
      CHECK(std::abs(v) <= limit);
      if (entry.init == InitKind::zero) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("hypernet head initialization is scaled down") {
  TargetSpec tspec;
  tspec.input_dim = 4;
  tspec.head_dims = {4};
  HyperNetSpec hspec;
  hspec.preference_dim = 2;
  hspec.trunk_hidden = {8};
  const ParamLayout hyper = hypernet_layout(hspec, target_layout(tspec));
  for (const auto& e : hyper.entries()) {
    if (e.name.rfind("head", 0) == 0 && e.shape.size() == 2) {
      CHECK(e.init_scale == doctest::Approx(0.1));
    }
  }
}

TEST_CASE("end-to-end hypernet-target gradient matches finite differences") {
  TargetSpec tspec;
  tspec.input_dim = 3;
  tspec.hidden = {4};
  tspec.head_dims = {1, 1};
  const ParamLayout target = target_layout(tspec);
  HyperNetSpec hspec;
  hspec.preference_dim = 2;
  hspec.trunk_hidden = {6};
  const ParamLayout hyper = hypernet_layout(hspec, target);
  const PreferenceVector r({0.35, 0.65});

  Rng rng(17);
  Tensor x = Tensor::zeros({4, 3});
  for (double& v : x.data) v = rng.normal();
  Tensor y0 = Tensor::zeros({4, 1}), y1 = Tensor::zeros({4, 1});
  for (double& v : y0.data) v = rng.normal();
  for (double& v : y1.data) v = rng.normal();

  const ParamVector theta = init_params(hyper, 33);
  Tape tape;
  const std::vector<NodeId> leaves = insert_leaves(tape, theta);
  const std::vector<NodeId> phi = hypernet_forward(hspec, tape, leaves, r, target);
  const std::vector<NodeId> heads = target_forward(tspec, tape, phi, tape.leaf(x));
  const NodeId root = tape.add(tape.scale(tape.mse(heads[0], tape.leaf(y0)), r[0]),
                               tape.scale(tape.mse(heads[1], tape.leaf(y1)), r[1]));
  tape.backward(root);
  const std::vector<double> analytic = flatten_grads(tape, leaves);

  auto f = [&](std::span<const double> flat) {
    Tape probe;
    ParamVector t2 = ParamVector::zeros(hyper);
    std::copy(flat.begin(), flat.end(), t2.data.begin());
    const std::vector<NodeId> lv = insert_leaves(probe, t2);
    const std::vector<NodeId> p2 = hypernet_forward(hspec, probe, lv, r, target);
    const std::vector<NodeId> h2 = target_forward(tspec, probe, p2, probe.leaf(x));
    const NodeId r2 = probe.add(probe.scale(probe.mse(h2[0], probe.leaf(y0)), r[0]),
                                probe.scale(probe.mse(h2[1], probe.leaf(y1)), r[1]));
    return probe.value(r2).data[0];
  };
  const std::vector<double> numeric = finite_diff_gradient(f, theta.data, 1e-6);
  CHECK(max_relative_error(analytic, numeric) < 1e-4);
}

TEST_CASE("checkpoint round trip is bit exact") {
  TargetSpec tspec;
  tspec.input_dim = 5;
  tspec.hidden = {6};
  tspec.head_dims = {2};
  HyperNetSpec hspec;
  hspec.preference_dim = 2;
  hspec.trunk_hidden = {9};
  const ParamLayout hyper = hypernet_layout(hspec, target_layout(tspec));
  const ParamVector theta = init_params(hyper, 101);

  const auto path = std::filesystem::temp_directory_path() / "phn_test_ckpt.phn";
  CheckpointHeader header;
  header.kind = "phn";
  header.seed = 101;
  header.steps = 7;
  header.spec_json = R"({"note":"round-trip"})";
  save_checkpoint(path.string(), header, theta);

  const Checkpoint loaded = load_checkpoint(path.string());
  CHECK(loaded.header.kind == "phn");
  CHECK(loaded.header.seed == 101);
  CHECK(loaded.header.steps == 7);
  CHECK(loaded.params.layout == theta.layout);
  REQUIRE(loaded.params.data.size() == theta.data.size());
  CHECK(std::memcmp(loaded.params.data.data(), theta.data.data(),
                    theta.data.size() * sizeof(double)) == 0);
  std::filesystem::remove(path);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto path = std::filesystem::temp_directory_path() / "phn_test_bad.phn";
  {
    std::ofstream out(path);
    out << "not a checkpoint";
  }
  CHECK_THROWS_AS(load_checkpoint(path.string()), IoError);
  std::filesystem::remove(path);
}

TEST_SUITE_END();
