#include <doctest.h>

#include <cmath>
#include <cstring>
#include <functional>

#include "phn/finite_diff.hpp"
#include "phn/rng.hpp"
#include "phn/tape.hpp"

using namespace phn;

namespace {

Tensor random_tensor(std::vector<int64_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data) v = scale * rng.normal();
  return t;
}

// Gradient check of a graph builder against central finite differences over
// one designated leaf.
void check_gradient(const std::function<NodeId(Tape&, NodeId)>& build, const Tensor& input,
                    double tol = 1e-5) {
  Tape tape;
  const NodeId leaf = tape.leaf(input);
  const NodeId root = build(tape, leaf);
  tape.backward(root);
  const Tensor analytic = tape.grad(leaf);

  auto f = [&](std::span<const double> flat) {
    Tape probe;
    const NodeId x = probe.leaf(Tensor(input.shape, {flat.begin(), flat.end()}));
    return probe.value(build(probe, x)).data[0];
  };
  const std::vector<double> numeric = finite_diff_gradient(f, input.data, 1e-6);
  CHECK(max_relative_error(analytic.data, numeric) < tol);
}

}  // namespace

TEST_SUITE_BEGIN("autodiff");

TEST_CASE("matmul basic arithmetic") {
  Tape tape;
  const NodeId a = tape.leaf(Tensor({2, 2}, {1, 2, 3, 4}));
  const NodeId b = tape.leaf(Tensor({2, 1}, {1, 1}));
  const Tensor& c = tape.value(tape.matmul(a, b));
  CHECK(c.shape == std::vector<int64_t>{2, 1});
  CHECK(c.data[0] == 3.0);
  CHECK(c.data[1] == 7.0);
}

TEST_CASE("relu clamps negatives") {
  Tape tape;
  const Tensor& out = tape.value(tape.relu(tape.leaf(Tensor({3}, {-1, 0, 2}))));
  CHECK(out.data == std::vector<double>{0, 0, 2});
}

TEST_CASE("mse identity case is zero") {
  Tape tape;
  const NodeId pred = tape.leaf(Tensor({2}, {1, 2}));
  const NodeId target = tape.leaf(Tensor({2}, {1, 2}));
  CHECK(tape.value(tape.mse(pred, target)).data[0] == 0.0);
}

TEST_CASE("shape mismatch errors name the op and shapes") {
  Tape tape;
  const NodeId a = tape.leaf(Tensor::zeros({2, 3}));
  const NodeId b = tape.leaf(Tensor::zeros({2, 3}));
  try {
    tape.matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("matmul") != std::string::npos);
    CHECK(msg.find("[2, 3]") != std::string::npos);
  }
}

TEST_CASE("backward of w^2 at w=3 is 6") {
  Tape tape;
  const NodeId w = tape.leaf(Tensor::scalar(3.0));
  tape.backward(tape.l2_norm_sq(w));
  CHECK(tape.grad(w).data[0] == doctest::Approx(6.0));
}

TEST_CASE("relu subgradient is 0 at and below the kink") {
  for (double x : {-1.0, 0.0}) {
    Tape tape;
    const NodeId w = tape.leaf(Tensor::scalar(x));
    tape.backward(tape.sum(tape.relu(w)));
    CHECK(tape.grad(w).data[0] == 0.0);
  }
}

TEST_CASE("backward requires a scalar root") {
  Tape tape;
  const NodeId v = tape.leaf(Tensor::zeros({3}));
  CHECK_THROWS_AS(tape.backward(v), ShapeError);
}

TEST_CASE("two-layer MLP gradient matches finite differences") {
  for (uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    Rng rng(seed);
    const Tensor w1 = random_tensor({4, 8}, rng, 0.5);
    const Tensor b1 = random_tensor({8}, rng, 0.3);
    const Tensor w2 = random_tensor({8, 3}, rng, 0.5);
    const Tensor x = random_tensor({5, 4}, rng);
    const Tensor y = random_tensor({5, 3}, rng);

    // flatten all parameters into one leaf via views; check each separately
    auto run = [&](const Tensor& probe_w1, const Tensor& probe_b1, const Tensor& probe_w2,
                   Tape& tape, NodeId& leaf_w1, NodeId& leaf_b1, NodeId& leaf_w2) {
      leaf_w1 = tape.leaf(probe_w1);
      leaf_b1 = tape.leaf(probe_b1);
      leaf_w2 = tape.leaf(probe_w2);
      const NodeId h = tape.relu(tape.add(tape.matmul(tape.leaf(x), leaf_w1), leaf_b1));
      const NodeId out = tape.matmul(h, leaf_w2);
      return tape.mse(out, tape.leaf(y));
    };

    Tape tape;
    NodeId lw1{}, lb1{}, lw2{};
    tape.backward(run(w1, b1, w2, tape, lw1, lb1, lw2));

    auto fd = [&](const Tensor& base, int which) {
      auto f = [&](std::span<const double> flat) {
        Tensor probe(base.shape, {flat.begin(), flat.end()});
        Tape t2;
        NodeId a{}, b{}, c{};
        const NodeId root = which == 0   ? run(probe, b1, w2, t2, a, b, c)
                            : which == 1 ? run(w1, probe, w2, t2, a, b, c)
                                         : run(w1, b1, probe, t2, a, b, c);
        return t2.value(root).data[0];
      };
      return finite_diff_gradient(f, base.data, 1e-6);
    };
    CHECK(max_relative_error(tape.grad(lw1).data, fd(w1, 0)) < 1e-5);
    CHECK(max_relative_error(tape.grad(lb1).data, fd(b1, 1)) < 1e-5);
    CHECK(max_relative_error(tape.grad(lw2).data, fd(w2, 2)) < 1e-5);
  }
}

TEST_CASE("every differentiable op matches finite differences") {
  Rng rng(99);

  SUBCASE("matmul") {
    const Tensor b = random_tensor({3, 2}, rng);
    check_gradient(
        [&](Tape& t, NodeId x) { return t.sum(t.matmul(x, t.leaf(b))); },
        random_tensor({2, 3}, rng));
  }
  SUBCASE("add elementwise") {
    const Tensor b = random_tensor({2, 3}, rng);
    check_gradient([&](Tape& t, NodeId x) { return t.sum(t.add(x, t.leaf(b))); },
                   random_tensor({2, 3}, rng));
  }
  SUBCASE("add bias broadcast") {
    const Tensor b = random_tensor({3}, rng);
    check_gradient([&](Tape& t, NodeId x) { return t.sum(t.add(x, t.leaf(b))); },
                   random_tensor({4, 3}, rng));
  }
  SUBCASE("add bias broadcast w.r.t. bias") {
    const Tensor a = random_tensor({4, 3}, rng);
    check_gradient([&](Tape& t, NodeId x) { return t.sum(t.add(t.leaf(a), x)); },
                   random_tensor({3}, rng));
  }
  SUBCASE("relu away from the kink") {
    Tensor x = random_tensor({3, 3}, rng);
    for (double& v : x.data) {
      if (std::abs(v) < 0.1) v = 0.5;
    }
    check_gradient([](Tape& t, NodeId n) { return t.sum(t.relu(n)); }, x);
  }
  SUBCASE("mse") {
    const Tensor y = random_tensor({4, 2}, rng);
    check_gradient([&](Tape& t, NodeId x) { return t.mse(x, t.leaf(y)); },
                   random_tensor({4, 2}, rng));
  }
  SUBCASE("mse w.r.t. target") {
    const Tensor pred = random_tensor({4, 2}, rng);
    check_gradient([&](Tape& t, NodeId x) { return t.mse(t.leaf(pred), x); },
                   random_tensor({4, 2}, rng));
  }
  SUBCASE("softmax_cross_entropy") {
    Tensor y = Tensor::zeros({3, 4});
    for (int64_t i = 0; i < 3; ++i) y.at(i, (i * 2) % 4) = 1.0;
    check_gradient([&](Tape& t, NodeId x) { return t.softmax_cross_entropy(x, t.leaf(y)); },
                   random_tensor({3, 4}, rng));
  }
  SUBCASE("scale sum l2 exp neg reshape") {
    check_gradient(
        [](Tape& t, NodeId x) {
          const NodeId r = t.reshape(x, {6});
          return t.add(t.l2_norm_sq(t.exp(t.scale(r, 0.3))), t.sum(t.neg(r)));
        },
        random_tensor({2, 3}, rng));
  }
  SUBCASE("embed") {
    check_gradient(
        [](Tape& t, NodeId table) { return t.sum(t.l2_norm_sq(t.embed(table, {0, 2, 2, 1}))); },
        random_tensor({3, 4}, rng));
  }
  SUBCASE("concat_cols") {
    const Tensor b = random_tensor({2, 3}, rng);
    check_gradient(
        [&](Tape& t, NodeId x) {
          const NodeId parts[] = {x, t.leaf(b)};
          return t.l2_norm_sq(t.concat_cols(parts));
        },
        random_tensor({2, 2}, rng));
  }
}

TEST_CASE("softmax cross entropy is log-sum-exp stabilized") {
  Tape tape;
  const NodeId z = tape.leaf(Tensor({1, 2}, {1000.0, 0.0}));
  const NodeId y = tape.leaf(Tensor({1, 2}, {1.0, 0.0}));
  const NodeId loss = tape.softmax_cross_entropy(z, y);
  CHECK(std::isfinite(tape.value(loss).data[0]));
  CHECK(tape.value(loss).data[0] == doctest::Approx(0.0));
}

TEST_CASE("backward is deterministic bit for bit") {
  auto build = [](Tape& tape, std::vector<NodeId>& leaves) {
    Rng rng(7);
    const NodeId w = tape.leaf(Tensor({3, 3}, {0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, 0.8, -0.9}));
    Tensor xt = Tensor::zeros({2, 3});
    for (double& v : xt.data) v = rng.normal();
    const NodeId x = tape.leaf(xt);
    leaves = {w, x};
    return tape.l2_norm_sq(tape.relu(tape.matmul(x, w)));
  };
  Tape t1, t2;
  std::vector<NodeId> l1, l2;
  t1.backward(build(t1, l1));
  t2.backward(build(t2, l2));
  for (size_t i = 0; i < l1.size(); ++i) {
    const auto& g1 = t1.grad(l1[i]).data;
    const auto& g2 = t2.grad(l2[i]).data;
    REQUIRE(g1.size() == g2.size());
    CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("gradient of a sum equals the sum of gradients") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Tape tape;
    const NodeId w = tape.leaf(random_tensor({4, 4}, rng));
    const NodeId x = tape.leaf(random_tensor({2, 4}, rng));
    const NodeId f1 = tape.l2_norm_sq(tape.matmul(x, w));
    const NodeId f2 = tape.sum(tape.exp(tape.scale(w, 0.1)));
    const NodeId total = tape.add(f1, f2);

    tape.backward(f1);
    const Tensor g1 = tape.grad(w);
    tape.backward(f2);
    const Tensor g2 = tape.grad(w);
    tape.backward(total);
    const Tensor g12 = tape.grad(w);
    for (size_t i = 0; i < g12.data.size(); ++i) {
      CHECK(g12.data[i] == doctest::Approx(g1.data[i] + g2.data[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("finite_diff_gradient sanity") {
  SUBCASE("sum of squares") {
    auto f = [](std::span<const double> v) {
      double acc = 0.0;
      for (double x : v) acc += x * x;
      return acc;
    };
    const std::vector<double> theta = {1.0, 2.0};
    const std::vector<double> g = finite_diff_gradient(f, theta, 1e-6);
    CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-6));
  }
  SUBCASE("constant function") {
    auto f = [](std::span<const double>) { return 42.0; };
    const std::vector<double> theta = {1.0, -1.0, 0.5};
    for (double g : finite_diff_gradient(f, theta, 1e-6)) {
      CHECK(g == doctest::Approx(0.0).epsilon(1e-9));
    }
  }
  SUBCASE("product") {
    auto f = [](std::span<const double> v) { return v[0] * v[1]; };
    const std::vector<double> theta = {3.0, 5.0};
    const std::vector<double> g = finite_diff_gradient(f, theta, 1e-6);
    CHECK(g[0] == doctest::Approx(5.0).epsilon(1e-7));
    CHECK(g[1] == doctest::Approx(3.0).epsilon(1e-7));
  }
  SUBCASE("h must be positive") {
    auto f = [](std::span<const double>) { return 0.0; };
    const std::vector<double> theta = {1.0};
    CHECK_THROWS_AS(finite_diff_gradient(f, theta, 0.0), ValueError);
  }
}

TEST_SUITE_END();
