#include "phn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "phn/errors.hpp"

namespace phn {

namespace {

// 2-D union of boxes via sweep over x-sorted maximal points.
double hv2(std::vector<LossVector> pts, double rx, double ry) {
  std::sort(pts.begin(), pts.end(), [](const LossVector& a, const LossVector& b) {
    return a[0] != b[0] ? a[0] < b[0] : a[1] < b[1];
  });
  double volume = 0.0;
  double y_prev = ry;
  for (const LossVector& p : pts) {
    if (p[1] >= y_prev) continue;  // dominated in the sweep
    volume += (rx - p[0]) * (y_prev - p[1]);
    y_prev = p[1];
  }
  return volume;
}

double hv_rec(std::vector<LossVector> pts, const ReferencePoint& ref, size_t dims) {
  if (pts.empty()) return 0.0;
  if (dims == 2) return hv2(std::move(pts), ref[0], ref[1]);

  const size_t last = dims - 1;
  std::sort(pts.begin(), pts.end(),
            [last](const LossVector& a, const LossVector& b) { return a[last] < b[last]; });

  double volume = 0.0;
  std::vector<LossVector> projected;
  projected.reserve(pts.size());
  for (size_t k = 0; k < pts.size(); ++k) {
    LossVector proj(pts[k].begin(), pts[k].begin() + static_cast<ptrdiff_t>(last));
    // drop projections dominated by an already-projected point
    bool dominated = false;
    for (const LossVector& q : projected) {
      bool le = true;
      for (size_t d = 0; d < last; ++d) {
        if (q[d] > proj[d]) {
          le = false;
          break;
        }
      }
      if (le) {
        dominated = true;
        break;
      }
    }
    if (!dominated) projected.push_back(std::move(proj));

    const double z_lo = pts[k][last];
    const double z_hi = k + 1 < pts.size() ? pts[k + 1][last] : ref[last];
    if (z_hi > z_lo) {
      volume += hv_rec(projected, ref, last) * (z_hi - z_lo);
    }
  }
  return volume;
}

std::vector<LossVector> bounded_points(std::span<const LossVector> points,
                                       const ReferencePoint& ref) {
  std::vector<LossVector> kept;
  for (const LossVector& p : points) {
    if (p.size() != ref.size()) {
      throw ShapeError("hypervolume: point dimension " + std::to_string(p.size()) +
                       " does not match reference dimension " + std::to_string(ref.size()));
    }
    bool bounded = true;
    for (size_t d = 0; d < p.size(); ++d) {
      if (!(p[d] < ref[d])) {
        bounded = false;
        break;
      }
    }
    if (bounded) kept.push_back(p);
  }
  return kept;
}

}  // namespace

double hypervolume(std::span<const LossVector> points, const ReferencePoint& ref) {
  if (ref.size() < 2) throw ShapeError("hypervolume: needs m >= 2 objectives");
  std::vector<LossVector> kept = bounded_points(points, ref);
  if (kept.empty()) return 0.0;
  return hv_rec(std::move(kept), ref, ref.size());
}

McEstimate hypervolume_mc(std::span<const LossVector> points, const ReferencePoint& ref,
                          size_t n_samples, Rng& rng) {
  std::vector<LossVector> kept = bounded_points(points, ref);
  if (kept.empty() || n_samples == 0) return {0.0, 0.0};

  const size_t dims = ref.size();
  std::vector<double> lo(dims);
  for (size_t d = 0; d < dims; ++d) {
    lo[d] = kept[0][d];
    for (const LossVector& p : kept) lo[d] = std::min(lo[d], p[d]);
  }
  double box = 1.0;
  for (size_t d = 0; d < dims; ++d) box *= ref[d] - lo[d];

  size_t hits = 0;
  std::vector<double> q(dims);
  for (size_t s = 0; s < n_samples; ++s) {
    for (size_t d = 0; d < dims; ++d) q[d] = rng.uniform(lo[d], ref[d]);
    for (const LossVector& p : kept) {
      bool dominated = true;
      for (size_t d = 0; d < dims; ++d) {
        if (p[d] > q[d]) {
          dominated = false;
          break;
        }
      }
      if (dominated) {
        ++hits;
        break;
      }
    }
  }
  const double frac = static_cast<double>(hits) / static_cast<double>(n_samples);
  return {box * frac,
          box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(n_samples))};
}

double non_uniformity(const PreferenceVector& r, const LossVector& losses) {
  if (r.size() != losses.size()) {
    throw ShapeError("uniformity: length mismatch " + std::to_string(r.size()) + " vs " +
                     std::to_string(losses.size()));
  }
  const size_t m = losses.size();
  double sum = 0.0;
  std::vector<double> weighted(m);
  for (size_t j = 0; j < m; ++j) {
    weighted[j] = r[j] * std::max(losses[j], kLossClamp);
    sum += weighted[j];
  }
  if (sum <= 0.0) throw ValueError("uniformity: all preference-weighted losses are zero");
  double kl = 0.0;
  for (size_t j = 0; j < m; ++j) {
    const double lhat = weighted[j] / sum;
    if (lhat > 0.0) kl += lhat * std::log(static_cast<double>(m) * lhat);
  }
  return kl;
}

double uniformity(const PreferenceVector& r, const LossVector& losses) {
  return 1.0 - non_uniformity(r, losses);
}

}  // namespace phn
