#pragma once

#include <span>
#include <vector>

#include "phn/moo.hpp"
#include "phn/rng.hpp"

namespace phn {

/// Upper corner bounding the dominated region; points not bounded by it are
/// ignored by the hypervolume.
using ReferencePoint = std::vector<double>;

/// Exact Lebesgue volume of the union of boxes [p_i, ref_i] over points with
/// every coordinate below the reference. 2-D uses a sorted sweep, higher
/// dimensions recursive slicing over the last coordinate.
double hypervolume(std::span<const LossVector> points, const ReferencePoint& ref);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Unbiased Monte-Carlo estimate of the same union volume; oracle for the
/// exact computation.
McEstimate hypervolume_mc(std::span<const LossVector> points, const ReferencePoint& ref,
                          size_t n_samples, Rng& rng);

/// KL divergence of the preference-weighted normalized losses from uniform:
/// mu_r = sum_j lhat_j log(m lhat_j), lhat_j = r_j l_j / sum_i r_i l_i.
double non_uniformity(const PreferenceVector& r, const LossVector& losses);

/// 1 - non_uniformity; equals 1 exactly when r_j l_j is constant over j.
double uniformity(const PreferenceVector& r, const LossVector& losses);

}  // namespace phn
