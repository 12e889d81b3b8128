#pragma once

#include <cstdint>
#include <random>

namespace pnpunmix {

/// Seedable generator used for every random draw in the library.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Uniform doubles take the top 53 bits of one engine word;
/// normal deviates use the Box-Muller transform on two uniforms
/// and cache the second deviate. Neither step relies on the
/// implementation-defined <random> distributions, so a seed produces the
/// same stream on every conforming toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform();

  /// Uniform on (0, 1].
  double uniformPositive();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal deviate.
  double gaussian();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool hasSpare_ = false;
};

/// SplitMix64 finalizer over (seed, stream); used to give independent
/// sub-streams (per abundance field, noise, pixel selection) their own seed.
std::uint64_t deriveSeed(std::uint64_t seed, std::uint64_t stream);

}  // namespace pnpunmix
