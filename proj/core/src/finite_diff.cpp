#include "phn/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "phn/errors.hpp"

namespace phn {

std::vector<double> finite_diff_gradient(
    const std::function<double(std::span<const double>)>& f, std::span<const double> theta,
    double h) {
  if (h <= 0.0) throw ValueError("finite_diff_gradient: h must be > 0");
  std::vector<double> point(theta.begin(), theta.end());
  std::vector<double> grad(theta.size(), 0.0);
  for (size_t i = 0; i < point.size(); ++i) {
    const double saved = point[i];
    point[i] = saved + h;
    const double fp = f(point);
    point[i] = saved - h;
    const double fm = f(point);
    point[i] = saved;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double eps_guard) {
  double worst = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), eps_guard});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace phn
