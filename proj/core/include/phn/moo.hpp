#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "phn/rng.hpp"

namespace phn {

/// Point on the m-simplex: entries >= 0, sum == 1 within 1e-8.
class PreferenceVector {
 public:
  explicit PreferenceVector(std::vector<double> r);

  size_t size() const { return r_.size(); }
  double operator[](size_t i) const { return r_[i]; }
  std::span<const double> values() const { return r_; }
  const std::vector<double>& vec() const { return r_; }

  static constexpr double kSimplexTol = 1e-8;

 private:
  std::vector<double> r_;
};

/// Per-objective loss values; nonnegative and finite.
using LossVector = std::vector<double>;

/// m gradients of the objectives w.r.t. a shared parameter vector, stored as
/// rows of an m x n matrix.
class GradientSet {
 public:
  GradientSet(size_t m, size_t n) : m_(m), n_(n), data_(m * n, 0.0) {}

  size_t objectives() const { return m_; }
  size_t dim() const { return n_; }
  std::span<double> row(size_t i) { return {data_.data() + i * n_, n_}; }
  std::span<const double> row(size_t i) const { return {data_.data() + i * n_, n_}; }
  bool all_finite() const;

 private:
  size_t m_, n_;
  std::vector<double> data_;
};

/// a strictly dominates b: a <= b componentwise with a < b somewhere.
bool dominates(const LossVector& a, const LossVector& b);

/// Indices of points not dominated by any other point. Duplicates are
/// mutually non-dominating and all retained.
std::vector<size_t> non_dominated_filter(std::span<const LossVector> points);

/// Weighted loss r . l.
double linear_scalarization(const PreferenceVector& r, const LossVector& losses);

/// Convex-combination weights beta minimizing ||G^T beta||_2 over the simplex.
/// m == 2 is solved in closed form; larger m uses Frank-Wolfe.
std::vector<double> min_norm_weights(const GradientSet& g);

/// Frank-Wolfe solver with away steps and exact line search on the quadratic.
/// Exposed separately so the closed-form two-objective route can be
/// cross-checked against it.
std::vector<double> min_norm_weights_frank_wolfe(const GradientSet& g, int max_iters = 500,
                                                 double gap_tol = 1e-9);

/// v = G^T beta.
std::vector<double> combine_gradients(const GradientSet& g, std::span<const double> beta);

/// Anchor direction in weight space that pulls the loss vector onto the
/// preference ray: a_j = r_j (log(m lhat_j) - mu_r).
std::vector<double> epo_anchor(const LossVector& losses, const PreferenceVector& r);

/// Balanced-descent weights. When the losses already sit on the ray
/// (non-uniformity <= eps_bal) this is the min-norm point; otherwise it
/// maximizes a^T G G^T beta over the simplex subject to keeping the worst
/// ray-violating objective non-increasing to first order.
std::vector<double> epo_weights(const GradientSet& g, const LossVector& losses,
                                const PreferenceVector& r, double eps_bal);

/// Symmetric Dirichlet(alpha) draw on the m-simplex.
PreferenceVector sample_preference(size_t m, double alpha, Rng& rng);

/// Losses below this are clamped before forming ray-normalized weights.
constexpr double kLossClamp = 1e-12;

}  // namespace phn
