#pragma once

#include <cstdint>
#include <random>

namespace phn {

/// Deterministic random source. All distributions are derived from the
/// mt19937_64 stream with fixed algorithms, so a seed pins the exact sequence
/// independent of the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform in (0, 1].
  double uniform_open();

  /// Standard normal (Box-Muller).
  double normal();

  /// Gamma(alpha, 1), alpha > 0. Marsaglia-Tsang squeeze; alpha < 1 handled by
  /// the Gamma(alpha + 1) boost.
  double gamma(double alpha);

 private:
  std::mt19937_64 gen_;
};

}  // namespace phn
