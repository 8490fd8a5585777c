#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace sdg {

/// xoshiro256** seeded through splitmix64.
///
/// The generator and every derived draw (uniform, normal, index, permutation)
/// are implemented here rather than through <random> distributions, whose
/// algorithms are implementation-defined. Identical seeds give identical draw
/// sequences on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (no cached second value).
  double normal();
  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n);
  bool bernoulli(double p);
  /// Random permutation of 0..n-1 (Fisher-Yates).
  std::vector<std::size_t> permutation(std::size_t n);

  /// Independent child stream; used to give each run/seed its own generator.
  static std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_;
};

}  // namespace sdg
