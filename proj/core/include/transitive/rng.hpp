#pragma once

#include <cstdint>
#include <random>

namespace transitive {

// SplitMix64 step. Used only to derive independent stream seeds so that
// (seed, stream ids...) always maps to the same generator state.
std::uint64_t splitmix64(std::uint64_t& state);

// Mixes a base seed with stream identifiers into a new 64-bit seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

/// Deterministic generator: std::mt19937_64 seeded through SplitMix64.
///
/// Both algorithms are fully specified by the C++ standard / published
/// reference, so sequences are identical on every platform. Bounded draws
/// avoid std::uniform_int_distribution, whose output is implementation
/// defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next() { return engine_(); }

  // Uniform over [0, 2^bits), bits in [1, 64]. Takes the high bits.
  std::uint64_t bits(unsigned count);

  // Uniform over [0, bound), bound >= 1. Rejection sampling.
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

}  // namespace transitive
