#pragma once

#include <functional>
#include <span>
#include <vector>

namespace phn {

/// Central-difference gradient estimate of a scalar function, one coordinate
/// at a time. Gradient-check oracle; independent of the tape machinery.
std::vector<double> finite_diff_gradient(
    const std::function<double(std::span<const double>)>& f, std::span<const double> theta,
    double h);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, eps_guard)
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double eps_guard = 1e-8);

}  // namespace phn
