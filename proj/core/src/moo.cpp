#include "phn/moo.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "phn/errors.hpp"
#include "phn/metrics.hpp"

namespace phn {

PreferenceVector::PreferenceVector(std::vector<double> r) : r_(std::move(r)) {
  if (r_.empty()) throw ShapeError("preference: empty vector");
  double sum = 0.0;
  for (double v : r_) {
    if (!(v >= 0.0)) {
      throw ValueError("preference: entries must be >= 0, got " + std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTol) {
    throw ValueError("preference: entries must sum to 1 within " +
                     std::to_string(kSimplexTol) + ", got sum " + std::to_string(sum));
  }
}

bool GradientSet::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool dominates(const LossVector& a, const LossVector& b) {
  if (a.size() != b.size()) {
    throw ShapeError("dominates: length mismatch " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  bool strict = false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strict = true;
  }
  return strict;
}

std::vector<size_t> non_dominated_filter(std::span<const LossVector> points) {
  std::vector<size_t> keep;
  for (size_t i = 0; i < points.size(); ++i) {
    bool dominated = false;
    for (size_t j = 0; j < points.size() && !dominated; ++j) {
      if (j != i && dominates(points[j], points[i])) dominated = true;
    }
    if (!dominated) keep.push_back(i);
  }
  return keep;
}

double linear_scalarization(const PreferenceVector& r, const LossVector& losses) {
  if (r.size() != losses.size()) {
    throw ShapeError("linear_scalarization: length mismatch " + std::to_string(r.size()) +
                     " vs " + std::to_string(losses.size()));
  }
  double acc = 0.0;
  for (size_t i = 0; i < losses.size(); ++i) acc += r[i] * losses[i];
  return acc;
}

std::vector<double> combine_gradients(const GradientSet& g, std::span<const double> beta) {
  std::vector<double> v(g.dim(), 0.0);
  for (size_t i = 0; i < g.objectives(); ++i) {
    const double w = beta[i];
    if (w == 0.0) continue;
    auto row = g.row(i);
    for (size_t k = 0; k < v.size(); ++k) v[k] += w * row[k];
  }
  return v;
}

namespace {

// Gram matrix Q = G G^T, m x m row-major.
std::vector<double> gram(const GradientSet& g) {
  const size_t m = g.objectives();
  std::vector<double> q(m * m, 0.0);
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = i; j < m; ++j) {
      double acc = 0.0;
      auto ri = g.row(i), rj = g.row(j);
      for (size_t k = 0; k < g.dim(); ++k) acc += ri[k] * rj[k];
      q[i * m + j] = acc;
      q[j * m + i] = acc;
    }
  }
  return q;
}

std::vector<double> mat_vec(const std::vector<double>& q, std::span<const double> x, size_t m) {
  std::vector<double> out(m, 0.0);
  for (size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (size_t j = 0; j < m; ++j) acc += q[i * m + j] * x[j];
    out[i] = acc;
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

std::vector<double> min_norm_two(const GradientSet& g) {
  auto g1 = g.row(0), g2 = g.row(1);
  double diff_sq = 0.0, num = 0.0;
  for (size_t k = 0; k < g.dim(); ++k) {
    const double d = g2[k] - g1[k];
    diff_sq += d * d;
    num += d * g2[k];
  }
  if (diff_sq <= 0.0) return {0.5, 0.5};  // identical gradients, any combination works
  const double gamma = std::clamp(num / diff_sq, 0.0, 1.0);
  return {gamma, 1.0 - gamma};
}

}  // namespace

std::vector<double> min_norm_weights_frank_wolfe(const GradientSet& g, int max_iters,
                                                 double gap_tol) {
  const size_t m = g.objectives();
  const std::vector<double> q = gram(g);

  // start at the vertex with the smallest norm
  size_t start = 0;
  for (size_t i = 1; i < m; ++i) {
    if (q[i * m + i] < q[start * m + start]) start = i;
  }
  std::vector<double> beta(m, 0.0);
  beta[start] = 1.0;

  for (int iter = 0; iter < max_iters; ++iter) {
    const std::vector<double> qb = mat_vec(q, beta, m);  // grad f / 2

    size_t fw = 0;
    size_t away = 0;
    bool away_found = false;
    for (size_t i = 0; i < m; ++i) {
      if (qb[i] < qb[fw]) fw = i;
      if (beta[i] > 0.0 && (!away_found || qb[i] > qb[away])) {
        away = i;
        away_found = true;
      }
    }

    const double bqb = dot(beta, qb);
    const double gap = 2.0 * (bqb - qb[fw]);
    if (gap <= gap_tol) break;

    // choose between the Frank-Wolfe direction (toward the best vertex) and
    // the away direction (off the worst active vertex)
    const double fw_score = bqb - qb[fw];
    const double away_score = away_found ? qb[away] - bqb : -1.0;

    std::vector<double> dir(m, 0.0);
    double gamma_max;
    if (away_found && away_score > fw_score && beta[away] < 1.0) {
      for (size_t i = 0; i < m; ++i) dir[i] = beta[i];
      dir[away] -= 1.0;
      gamma_max = beta[away] / (1.0 - beta[away]);
    } else {
      for (size_t i = 0; i < m; ++i) dir[i] = -beta[i];
      dir[fw] += 1.0;
      gamma_max = 1.0;
    }

    // exact line search on the quadratic: f(beta + t d) minimized at
    // t = -<Q beta, d> / <d, Q d>
    const double qbd = dot(qb, dir);
    const std::vector<double> qd = mat_vec(q, dir, m);
    const double dqd = dot(dir, qd);
    double t;
    if (dqd <= 0.0) {
      t = qbd < 0.0 ? gamma_max : 0.0;
    } else {
      t = std::clamp(-qbd / dqd, 0.0, gamma_max);
    }
    if (t <= 0.0) break;
    for (size_t i = 0; i < m; ++i) beta[i] += t * dir[i];
    // sweep tiny negatives from the line-search arithmetic
    double sum = 0.0;
    for (double& b : beta) {
      if (b < 0.0) b = 0.0;
      sum += b;
    }
    for (double& b : beta) b /= sum;
  }
  return beta;
}

std::vector<double> min_norm_weights(const GradientSet& g) {
  if (!g.all_finite()) throw ValueError("min_norm_weights: non-finite gradient entries");
  const size_t m = g.objectives();
  if (m == 0) throw ShapeError("min_norm_weights: no objectives");
  if (m == 1) return {1.0};
  if (m == 2) return min_norm_two(g);
  return min_norm_weights_frank_wolfe(g);
}

std::vector<double> epo_anchor(const LossVector& losses, const PreferenceVector& r) {
  const size_t m = losses.size();
  std::vector<double> weighted(m);
  double sum = 0.0;
  for (size_t j = 0; j < m; ++j) {
    weighted[j] = r[j] * std::max(losses[j], kLossClamp);
    sum += weighted[j];
  }
  const double mu = non_uniformity(r, losses);
  std::vector<double> anchor(m, 0.0);
  for (size_t j = 0; j < m; ++j) {
    const double lhat = weighted[j] / sum;
    if (lhat > 0.0) anchor[j] = r[j] * (std::log(static_cast<double>(m) * lhat) - mu);
  }
  return anchor;
}

std::vector<double> epo_weights(const GradientSet& g, const LossVector& losses,
                                const PreferenceVector& r, double eps_bal) {
  const size_t m = g.objectives();
  if (losses.size() != m || r.size() != m) {
    throw ShapeError("epo_weights: dimension mismatch (objectives " + std::to_string(m) +
                     ", losses " + std::to_string(losses.size()) + ", preference " +
                     std::to_string(r.size()) + ")");
  }
  if (!g.all_finite()) throw ValueError("epo_weights: non-finite gradient entries");
  bool all_zero = true;
  for (size_t i = 0; i < m && all_zero; ++i) {
    for (double v : g.row(i)) {
      if (v != 0.0) {
        all_zero = false;
        break;
      }
    }
  }
  if (all_zero) throw ValueError("epo_weights: all-zero gradient matrix");

  // balanced: pure descent
  if (non_uniformity(r, losses) <= eps_bal) return min_norm_weights(g);

  const std::vector<double> anchor = epo_anchor(losses, r);
  const std::vector<double> q = gram(g);
  const std::vector<double> obj = mat_vec(q, anchor, m);  // objective coefficients Q a

  // worst ray-violating objective must not increase to first order
  size_t jstar = 0;
  for (size_t j = 1; j < m; ++j) {
    if (r[j] * losses[j] > r[jstar] * losses[jstar]) jstar = j;
  }
  std::vector<double> cons(m);  // (Q beta)_{jstar} = cons . beta
  for (size_t j = 0; j < m; ++j) cons[j] = q[jstar * m + j];

  // The feasible set is the simplex cut by one halfspace, so the optimum sits
  // at a simplex vertex or on an edge crossing cons . beta = 0. Enumerate.
  std::vector<double> best;
  double best_obj = 0.0;
  auto consider = [&](std::vector<double> beta, double value) {
    if (best.empty() || value > best_obj) {
      best = std::move(beta);
      best_obj = value;
    }
  };
  for (size_t j = 0; j < m; ++j) {
    if (cons[j] >= 0.0) {
      std::vector<double> beta(m, 0.0);
      beta[j] = 1.0;
      consider(std::move(beta), obj[j]);
    }
  }
  for (size_t i = 0; i < m; ++i) {
    for (size_t j = i + 1; j < m; ++j) {
      double ci = cons[i], cj = cons[j];
      size_t pos = i, neg = j;
      if (ci < 0.0 && cj > 0.0) {
        std::swap(pos, neg);
        std::swap(ci, cj);
      }
      if (!(ci > 0.0 && cj < 0.0)) continue;
      const double t = -cj / (ci - cj);  // weight on the positive vertex
      std::vector<double> beta(m, 0.0);
      beta[pos] = t;
      beta[neg] = 1.0 - t;
      consider(std::move(beta), t * obj[pos] + (1.0 - t) * obj[neg]);
    }
  }
  if (best.empty()) {
    // no admissible combination: fall back to pure balance on the worst objective
    std::vector<double> beta(m, 0.0);
    beta[jstar] = 1.0;
    return beta;
  }
  return best;
}

PreferenceVector sample_preference(size_t m, double alpha, Rng& rng) {
  if (alpha <= 0.0) {
    throw ValueError("sample_preference: alpha must be > 0, got " + std::to_string(alpha));
  }
  if (m == 0) throw ShapeError("sample_preference: m must be >= 1");
  std::vector<double> draws(m);
  for (;;) {
    double sum = 0.0;
    for (size_t i = 0; i < m; ++i) {
      draws[i] = rng.gamma(alpha);
      sum += draws[i];
    }
    if (sum > 0.0 && std::isfinite(sum)) {
      for (double& v : draws) v /= sum;
      // renormalize exactly against rounding before validation
      double s2 = 0.0;
      for (double v : draws) s2 += v;
      for (double& v : draws) v /= s2;
      return PreferenceVector(std::move(draws));
    }
  }
}

}  // namespace phn
