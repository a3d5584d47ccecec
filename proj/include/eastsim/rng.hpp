#pragma once

#include <cstdint>

namespace eastsim {

// Deterministic random stream: xoshiro256++ seeded through SplitMix64.
// Substreams are derived from (seed, stream index) so that per-trajectory
// randomness is independent of batch size and thread scheduling. The same
// (seed, stream) pair produces the same draws on every platform; no
// standard-library distributions are involved anywhere in the sampling
// paths, since their output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = split_mix(x);
  }

  // Substream `stream` of a master seed. Streams 0,1,2,... are decorrelated
  // by advancing the SplitMix64 seed sequence with the golden-ratio gamma.
  static Rng substream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed + (stream + 1) * kGolden;
    return Rng(split_mix(x));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 significant bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n) {
    // Rejection-free modulo is fine here: n is tiny compared to 2^64 in all
    // call sites (basis-state draws), so the bias is < 2^-50.
    return next_u64() % n;
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  static std::uint64_t split_mix(std::uint64_t& x) {
    std::uint64_t z = (x += kGolden);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_[4];
};

}  // namespace eastsim
