#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random streams. Each stream is keyed by (seed, replication,
// role); the i-th output is a pure function of (key, i), so streams can be
// created in any order, on any thread, and always produce the same sequence.

namespace mixpool::rng {

// Finalizer from SplitMix64 (Steele, Lea, Flood 2014 public-domain constants).
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream roles keep shock sequences independent of each other and of the
// order in which a simulation happens to consume them.
enum class StreamRole : std::uint64_t {
  state_shock = 1,    // AR innovations (including the stationary start draw)
  outcome_shock = 2,  // measurement shocks on the realized series
  signal_noise = 3,   // per-forecaster signal noise
  generic = 4,        // everything else (fixtures, randomized PIT draws, ...)
};

class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t replication, StreamRole role)
      : key_(derive_key(seed, replication, static_cast<std::uint64_t>(role))) {}

  Stream(std::uint64_t seed, std::uint64_t replication, std::uint64_t role)
      : key_(derive_key(seed, replication, role)) {}

  std::uint64_t next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  // Uniform on (0, 1): 53-bit mantissa, zero mapped up to the smallest step.
  double next_uniform() {
    const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  // Standard normal via the trigonometric Box-Muller form. Consumes exactly
  // two uniforms per draw so the stream position never depends on values.
  double next_normal() {
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t replication,
                                  std::uint64_t role) {
    std::uint64_t h = mix64(seed ^ 0x5851f42d4c957f2dULL);
    h = mix64(h ^ (replication * 0x14057b7ef767814fULL));
    h = mix64(h ^ (role * 0x2545f4914f6cdd1dULL));
    return h;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace mixpool::rng
