#pragma once

#include "flowbench/numeric/matrix.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace flowbench {

/// One step of the splitmix64 sequence; used for seeding and seed derivation.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent child seed, e.g. per trial or per sweep cell.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// xoshiro256** generator seeded through splitmix64, with Box-Muller normals.
///
/// The sequence is fully determined by the seed; no platform RNG or
/// std::*_distribution is involved, so identical seeds give identical streams
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }
  /// Number of 64-bit words drawn so far.
  std::uint64_t draws() const { return draws_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_low();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  double normal();

  // UniformRandomBitGenerator, for code that wants <random> interop.
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return next_u64(); }

 private:
  std::array<std::uint64_t, 4> state_{};
  std::uint64_t seed_;
  std::uint64_t draws_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// n x d matrix of i.i.d. N(0, 1) draws, filled row by row.
Matrix standard_normal_sample(Rng& rng, Index n, Index d);

/// Fisher-Yates permutation of 0..n-1.
std::vector<Index> random_permutation(Rng& rng, Index n);

}  // namespace flowbench
