#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "phn/errors.hpp"
#include "phn/metrics.hpp"
#include "phn/moo.hpp"
#include "test_helpers.hpp"

using namespace phn;
using namespace phn::testing;

TEST_SUITE_BEGIN("moo");

TEST_CASE("dominance definition") {
  CHECK(dominates({1, 2}, {2, 3}));
  CHECK_FALSE(dominates({1, 2}, {2, 1}));  // incomparable
  CHECK_FALSE(dominates({1, 2}, {1, 2}));  // strictness
  CHECK(dominates({1, 2}, {1, 3}));
  CHECK_THROWS_AS(dominates({1, 2}, {1, 2, 3}), ShapeError);
}

TEST_CASE("non_dominated_filter basics") {
  const std::vector<LossVector> staircase = {{1, 3}, {2, 2}, {3, 1}};
  CHECK(non_dominated_filter(staircase) == std::vector<size_t>{0, 1, 2});

  const std::vector<LossVector> nested = {{1, 1}, {2, 2}};
  CHECK(non_dominated_filter(nested) == std::vector<size_t>{0});

  // duplicates are mutually non-dominating and all retained
  const std::vector<LossVector> dup = {{1, 2}, {1, 2}, {3, 0.5}};
  CHECK(non_dominated_filter(dup) == std::vector<size_t>{0, 1, 2});
}

TEST_CASE("non_dominated_filter matches brute force on 200 random 3-D points") {
  Rng rng(42);
  std::vector<LossVector> points;
  std::vector<std::vector<double>> raw;
  for (int i = 0; i < 200; ++i) {
    std::vector<double> p = {rng.uniform(), rng.uniform(), rng.uniform()};
    raw.push_back(p);
    points.push_back(p);
  }
  CHECK(non_dominated_filter(points) == brute_non_dominated(raw));
}

TEST_CASE("non_dominated_filter output is an antichain") {
  Rng rng(7);
  std::vector<LossVector> points;
  for (int i = 0; i < 60; ++i) points.push_back({rng.uniform(), rng.uniform()});
  const std::vector<size_t> keep = non_dominated_filter(points);
  for (size_t a : keep) {
    for (size_t b : keep) {
      if (a != b) CHECK_FALSE(dominates(points[a], points[b]));
    }
  }
}

TEST_CASE("linear scalarization") {
  CHECK(linear_scalarization(PreferenceVector({0.3, 0.7}), {2, 1}) == doctest::Approx(1.3));
  CHECK(linear_scalarization(PreferenceVector({0, 1}), {2, 5}) == doctest::Approx(5.0));
  CHECK(linear_scalarization(PreferenceVector({0.5, 0.5}), {3, 3}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(linear_scalarization(PreferenceVector({0.5, 0.5}), {1, 2, 3}), ShapeError);
}

TEST_CASE("preference vector validates the simplex") {
  CHECK_THROWS_AS(PreferenceVector({0.5, 0.6}), ValueError);
  CHECK_THROWS_AS(PreferenceVector({1.5, -0.5}), ValueError);
  CHECK_NOTHROW(PreferenceVector({1.0, 0.0}));
}

TEST_CASE("min_norm_weights two-gradient cases against the grid oracle") {
  SUBCASE("orthonormal gradients split evenly") {
    GradientSet g(2, 2);
    g.row(0)[0] = 1.0;
    g.row(1)[1] = 1.0;
    const std::vector<double> beta = min_norm_weights(g);
    const std::vector<double> oracle = min_norm_two_grid(g);
    CHECK(beta[0] == doctest::Approx(oracle[0]).epsilon(1e-3));
    CHECK(beta[0] == doctest::Approx(0.5));
    CHECK(beta[1] == doctest::Approx(0.5));
  }
  SUBCASE("collinear gradients clip to the shorter one") {
    GradientSet g(2, 2);
    g.row(0)[0] = 1.0;
    g.row(1)[0] = 3.0;
    const std::vector<double> beta = min_norm_weights(g);
    const std::vector<double> oracle = min_norm_two_grid(g);
    CHECK(beta[0] == doctest::Approx(oracle[0]).epsilon(1e-3));
    CHECK(beta[0] == doctest::Approx(1.0));
    const std::vector<double> v = combine_gradients(g, beta);
    CHECK(v[0] == doctest::Approx(1.0));
    CHECK(v[1] == doctest::Approx(0.0));
  }
  SUBCASE("identical gradients return the shared gradient") {
    GradientSet g(2, 3);
    for (size_t k = 0; k < 3; ++k) g.row(0)[k] = g.row(1)[k] = 0.5 * (1.0 + double(k));
    const std::vector<double> beta = min_norm_weights(g);
    const std::vector<double> v = combine_gradients(g, beta);
    for (size_t k = 0; k < 3; ++k) CHECK(v[k] == doctest::Approx(g.row(0)[k]));
  }
  SUBCASE("random instances agree with the grid oracle") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const GradientSet g = random_gradients(2, 6, rng);
      const std::vector<double> beta = min_norm_weights(g);
      const std::vector<double> oracle = min_norm_two_grid(g);
      const std::vector<double> v = combine_gradients(g, beta);
      const std::vector<double> vo = combine_gradients(g, oracle);
      CHECK(norm_sq(v) <= norm_sq(vo) + 1e-8);
    }
  }
}

TEST_CASE("min-norm optimality condition g_i . v >= ||v||^2") {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const size_t m = 2 + trial % 4;  // 2..5
    const GradientSet g = random_gradients(m, 10, rng);
    const std::vector<double> beta = min_norm_weights(g);
    const std::vector<double> v = combine_gradients(g, beta);
    const double vsq = norm_sq(v);
    for (size_t i = 0; i < m; ++i) {
      double gv = 0.0;
      for (size_t k = 0; k < g.dim(); ++k) gv += g.row(i)[k] * v[k];
      CHECK(gv >= vsq - 1e-8);
    }
  }
}

TEST_CASE("descent property: -v is a descent direction for every objective") {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const size_t m = 2 + trial % 3;
    const GradientSet g = random_gradients(m, 8, rng);
    const std::vector<double> v = combine_gradients(g, min_norm_weights(g));
    const double vsq = norm_sq(v);
    if (vsq == 0.0) continue;
    for (size_t i = 0; i < m; ++i) {
      double directional = 0.0;
      for (size_t k = 0; k < g.dim(); ++k) directional += g.row(i)[k] * (-v[k]);
      CHECK(directional <= -vsq + 1e-8);
    }
  }
}

TEST_CASE("frank-wolfe agrees with the analytic two-gradient solution") {
  Rng rng(13);
  for (int trial = 0; trial < 25; ++trial) {
    const GradientSet g = random_gradients(2, 5, rng);
    const std::vector<double> analytic = min_norm_weights(g);
    const std::vector<double> fw = min_norm_weights_frank_wolfe(g);
    const double va = norm_sq(combine_gradients(g, analytic));
    const double vf = norm_sq(combine_gradients(g, fw));
    CHECK(std::abs(va - vf) < 1e-6);
    CHECK(std::abs(analytic[0] - fw[0]) < 1e-5);
  }
}

TEST_CASE("min_norm_weights is scale equivariant for m = 2") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const GradientSet g = random_gradients(2, 4, rng);
    GradientSet scaled(2, 4);
    const double c = 3.7;
    for (size_t i = 0; i < 2; ++i) {
      for (size_t k = 0; k < 4; ++k) scaled.row(i)[k] = c * g.row(i)[k];
    }
    const std::vector<double> b1 = min_norm_weights(g);
    const std::vector<double> b2 = min_norm_weights(scaled);
    CHECK(b1[0] == doctest::Approx(b2[0]).epsilon(1e-12));
  }
}

TEST_CASE("min_norm_weights rejects non-finite gradients") {
  GradientSet g(2, 2);
  g.row(0)[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(min_norm_weights(g), ValueError);
}

TEST_CASE("epo_weights balanced branch returns the min-norm solution") {
  Rng rng(3);
  const GradientSet g = random_gradients(2, 5, rng);
  // losses exactly on the ray: r_j l_j constant
  const PreferenceVector r({0.25, 0.75});
  const LossVector losses = {3.0, 1.0};  // 0.25*3 == 0.75*1
  const std::vector<double> beta = epo_weights(g, losses, r, 1e-3);
  const std::vector<double> mn = min_norm_weights(g);
  CHECK(beta == mn);
}

TEST_CASE("epo_weights pulls toward the violated objective") {
  GradientSet g(2, 2);
  g.row(0)[0] = 1.0;
  g.row(1)[1] = 1.0;
  const PreferenceVector r({0.5, 0.5});
  const LossVector losses = {10.0, 1.0};
  const std::vector<double> beta = epo_weights(g, losses, r, 1e-3);
  CHECK(beta[0] == doctest::Approx(1.0));
  CHECK(beta[1] == doctest::Approx(0.0));
}

TEST_CASE("epo_weights LP objective matches the simplex-grid oracle") {
  Rng rng(29);
  int tested = 0;
  while (tested < 20) {
    const size_t m = tested % 2 == 0 ? 2 : 3;
    const GradientSet g = random_gradients(m, 6, rng);
    LossVector losses(m);
    for (double& v : losses) v = 0.2 + 3.0 * rng.uniform();
    const PreferenceVector r = sample_preference(m, 1.0, rng);
    if (non_uniformity(r, losses) <= 1e-3) continue;  // balanced branch, not the LP
    ++tested;

    const std::vector<double> beta = epo_weights(g, losses, r, 1e-3);
    const std::vector<double> anchor = epo_anchor(losses, r);
    const std::vector<double> q = gram_flat(g);
    size_t jstar = 0;
    for (size_t j = 1; j < m; ++j) {
      if (r[j] * losses[j] > r[jstar] * losses[jstar]) jstar = j;
    }
    // returned weights are feasible
    double sum = 0.0, cons = 0.0, ours = 0.0;
    for (size_t i = 0; i < m; ++i) {
      sum += beta[i];
      double qb = 0.0;
      for (size_t j = 0; j < m; ++j) qb += q[i * m + j] * beta[j];
      ours += anchor[i] * qb;
      cons += q[jstar * m + i] * beta[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(cons >= -1e-9);
    // and optimal against the grid
    const double grid = epo_grid_objective(q, m, anchor, jstar);
    CHECK(ours >= grid - 1e-6);
  }
}

TEST_CASE("epo_weights never increases the worst ray-violating loss to first order") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const size_t m = 2 + trial % 3;
    const GradientSet g = random_gradients(m, 7, rng);
    LossVector losses(m);
    for (double& v : losses) v = 0.1 + 2.0 * rng.uniform();
    const PreferenceVector r = sample_preference(m, 0.5, rng);
    const std::vector<double> beta = epo_weights(g, losses, r, 1e-3);
    size_t jstar = 0;
    for (size_t j = 1; j < m; ++j) {
      if (r[j] * losses[j] > r[jstar] * losses[jstar]) jstar = j;
    }
    const std::vector<double> v = combine_gradients(g, beta);
    double gv = 0.0;
    for (size_t k = 0; k < g.dim(); ++k) gv += g.row(jstar)[k] * v[k];
    if (non_uniformity(r, losses) > 1e-3) CHECK(gv >= -1e-8);
  }
}

TEST_CASE("epo_weights rejects an all-zero gradient matrix") {
  GradientSet g(2, 3);
  CHECK_THROWS_AS(epo_weights(g, {1.0, 2.0}, PreferenceVector({0.5, 0.5}), 1e-3), ValueError);
}

TEST_CASE("sample_preference lands on the simplex deterministically") {
  Rng rng(123);
  for (int i = 0; i < 100; ++i) {
    const PreferenceVector r = sample_preference(3, 0.2, rng);
    double sum = 0.0;
    for (size_t j = 0; j < r.size(); ++j) {
      CHECK(r[j] >= 0.0);
      sum += r[j];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }

  Rng a(77), b(77);
  for (int i = 0; i < 10; ++i) {
    const PreferenceVector ra = sample_preference(4, 0.2, a);
    const PreferenceVector rb = sample_preference(4, 0.2, b);
    CHECK(ra.vec() == rb.vec());
  }

  Rng rng2(9);
  CHECK_THROWS_AS(sample_preference(3, 0.0, rng2), ValueError);
  CHECK_THROWS_AS(sample_preference(3, -1.0, rng2), ValueError);
}

TEST_CASE("sample_preference empirical mean approaches uniform") {
  Rng rng(2024);
  const size_t m = 3;
  const size_t n = 100000;
  std::vector<double> mean(m, 0.0);
  for (size_t i = 0; i < n; ++i) {
    const PreferenceVector r = sample_preference(m, 0.2, rng);
    for (size_t j = 0; j < m; ++j) mean[j] += r[j];
  }
  for (size_t j = 0; j < m; ++j) {
    CHECK(mean[j] / double(n) == doctest::Approx(1.0 / 3.0).epsilon(3e-2));
  }
}

TEST_CASE("alpha = 0.2 concentrates mass near the vertices") {
  // chi-squared of Dir(0.2) samples against the analytic Beta(a, a) bin masses
  // (first coordinate of a 2-simplex Dirichlet is Beta(a, a)) and against the
  // uniform density of alpha = 1.
  const double a = 0.2;
  auto beta_cdf = [a](double x) {
    // int_0^x t^(a-1)(1-t)^(a-1) dt via the substitution t = u^(1/a); the
    // transformed integrand (1/a)(1-u^(1/a))^(a-1) is smooth on [0, x^a]
    auto integrand = [a](double u) {
      return (1.0 / a) * std::pow(1.0 - std::pow(u, 1.0 / a), a - 1.0);
    };
    auto simpson = [&](double lo, double hi, int steps) {
      const double h = (hi - lo) / steps;
      double acc = integrand(lo) + integrand(hi);
      for (int i = 1; i < steps; ++i) acc += integrand(lo + i * h) * (i % 2 ? 4.0 : 2.0);
      return acc * h / 3.0;
    };
    const bool flip = x > 0.5;
    const double xb = flip ? 1.0 - x : x;
    const double upper = std::pow(xb, a);
    const double partial = simpson(0.0, upper, 2000);
    const double full = 2.0 * simpson(0.0, std::pow(0.5, a), 2000);  // symmetric density
    const double cdf = partial / full;
    return flip ? 1.0 - cdf : cdf;
  };

  const std::vector<double> edges = {0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0};
  std::vector<double> p_dir, p_uniform;
  for (size_t b = 0; b + 1 < edges.size(); ++b) {
    p_dir.push_back(beta_cdf(edges[b + 1]) - beta_cdf(edges[b]));
    p_uniform.push_back(edges[b + 1] - edges[b]);
  }

  Rng rng(555);
  const size_t n = 100000;
  std::vector<double> counts(p_dir.size(), 0.0);
  for (size_t i = 0; i < n; ++i) {
    const PreferenceVector r = sample_preference(2, a, rng);
    const double x = r[0];
    for (size_t b = 0; b + 1 < edges.size(); ++b) {
      if (x <= edges[b + 1] || b + 2 == edges.size()) {
        counts[b] += 1.0;
        break;
      }
    }
  }
  auto chi2 = [&](const std::vector<double>& p) {
    double acc = 0.0;
    for (size_t b = 0; b < counts.size(); ++b) {
      const double expected = p[b] * double(n);
      acc += (counts[b] - expected) * (counts[b] - expected) / expected;
    }
    return acc;
  };
  CHECK(chi2(p_dir) < 60.0);        // consistent with the alpha = 0.2 density
  CHECK(chi2(p_uniform) > 1000.0);  // far from the alpha = 1 density
  // outer bins hold more mass than under uniform sampling
  CHECK(counts.front() / double(n) > 2.0 * p_uniform.front());
  CHECK(counts.back() / double(n) > 2.0 * p_uniform.back());
}

TEST_SUITE_END();
